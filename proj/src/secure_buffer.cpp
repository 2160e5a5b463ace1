#include "voidface/secure_buffer.hpp"

#include <sodium.h>

#include <algorithm>
#include <fstream>

namespace voidface {

void secure_zero(std::span<Byte> bytes) {
  if (!bytes.empty()) sodium_memzero(bytes.data(), bytes.size());
}

void shred_file(const std::filesystem::path& p) {
  std::error_code ec;
  auto size = std::filesystem::file_size(p, ec);
  if (!ec) {
    std::ofstream out(p, std::ios::binary | std::ios::in | std::ios::out);
    std::vector<char> zeros(static_cast<std::size_t>(size), 0);
    out.write(zeros.data(), static_cast<std::streamsize>(zeros.size()));
  }
  std::filesystem::remove(p, ec);
}

BufferRegistry::Id BufferRegistry::add(std::string label, std::span<const Byte> bytes) {
  std::lock_guard lock(mu_);
  Id id = next_++;
  live_.emplace(id, Entry{std::move(label), bytes});
  return id;
}

void BufferRegistry::update(Id id, std::span<const Byte> bytes) {
  std::lock_guard lock(mu_);
  if (auto it = live_.find(id); it != live_.end()) it->second.bytes = bytes;
}

void BufferRegistry::remove(Id id) {
  std::lock_guard lock(mu_);
  live_.erase(id);
}

std::size_t BufferRegistry::live_count() const {
  std::lock_guard lock(mu_);
  return live_.size();
}

std::size_t BufferRegistry::live_bytes() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [id, e] : live_) n += e.bytes.size();
  return n;
}

std::vector<std::string> BufferRegistry::live_labels() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, e] : live_) out.push_back(e.label);
  return out;
}

bool BufferRegistry::contains(std::span<const Byte> needle) const {
  std::lock_guard lock(mu_);
  if (needle.empty()) return false;
  for (const auto& [id, e] : live_)
    if (std::search(e.bytes.begin(), e.bytes.end(), needle.begin(), needle.end()) != e.bytes.end())
      return true;
  return false;
}

SensitiveBuffer::SensitiveBuffer(BufferRegistry* registry, std::string label,
                                 std::vector<Byte> data)
    : registry_(registry), data_(std::move(data)) {
  if (registry_) id_ = registry_->add(std::move(label), data_);
}

SensitiveBuffer::SensitiveBuffer(SensitiveBuffer&& other) noexcept
    : registry_(other.registry_), id_(other.id_), data_(std::move(other.data_)) {
  other.registry_ = nullptr;
  other.id_ = 0;
  other.data_.clear();
  if (registry_) registry_->update(id_, data_);
}

SensitiveBuffer& SensitiveBuffer::operator=(SensitiveBuffer&& other) noexcept {
  if (this != &other) {
    wipe();
    registry_ = other.registry_;
    id_ = other.id_;
    data_ = std::move(other.data_);
    other.registry_ = nullptr;
    other.id_ = 0;
    other.data_.clear();
    if (registry_) registry_->update(id_, data_);
  }
  return *this;
}

void SensitiveBuffer::wipe() noexcept {
  secure_zero(data_);
  data_.clear();
  data_.shrink_to_fit();
  if (registry_) registry_->remove(id_);
  registry_ = nullptr;
  id_ = 0;
}

}  // namespace voidface
