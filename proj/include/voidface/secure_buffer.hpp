#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "voidface/types.hpp"

namespace voidface {

void secure_zero(std::span<Byte> bytes);

// Overwrites with zeros, then unlinks. Best effort at the application layer.
void shred_file(const std::filesystem::path& p);

// Tracks every live sensitive buffer owned by a component (a pipeline, a
// workstation) so hygiene can be asserted: nothing registered after the
// owner says it is done.
class BufferRegistry {
 public:
  using Id = std::uint64_t;

  Id add(std::string label, std::span<const Byte> bytes);
  void update(Id id, std::span<const Byte> bytes);
  void remove(Id id);

  std::size_t live_count() const;
  std::size_t live_bytes() const;
  std::vector<std::string> live_labels() const;
  // True if any live buffer contains `needle` as a contiguous run.
  bool contains(std::span<const Byte> needle) const;

 private:
  struct Entry {
    std::string label;
    std::span<const Byte> bytes;
  };
  mutable std::mutex mu_;
  std::map<Id, Entry> live_;
  Id next_ = 1;
};

// Owning byte buffer that is zeroized when wiped or destroyed.
class SensitiveBuffer {
 public:
  SensitiveBuffer() = default;
  SensitiveBuffer(BufferRegistry* registry, std::string label, std::vector<Byte> data);
  ~SensitiveBuffer() { wipe(); }

  SensitiveBuffer(SensitiveBuffer&& other) noexcept;
  SensitiveBuffer& operator=(SensitiveBuffer&& other) noexcept;
  SensitiveBuffer(const SensitiveBuffer&) = delete;
  SensitiveBuffer& operator=(const SensitiveBuffer&) = delete;

  std::span<const Byte> view() const { return data_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  void wipe() noexcept;

 private:
  BufferRegistry* registry_ = nullptr;
  BufferRegistry::Id id_ = 0;
  std::vector<Byte> data_;
};

}  // namespace voidface
