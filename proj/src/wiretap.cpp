#include <algorithm>

#include "voidface/access_structure.hpp"
#include "voidface/bridge.hpp"
#include "voidface/share_format.hpp"
#include "voidface/simnet.hpp"

namespace voidface::sim {

using nlohmann::json;

Link make_link(NodeId a, NodeId b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

std::size_t WiretapObservation::reconstructable_count() const {
  return static_cast<std::size_t>(std::count_if(verdicts.begin(), verdicts.end(),
                                                [](const PatchVerdict& v) { return v.reconstructable; }));
}

json WiretapObservation::to_json() const {
  json taps = json::array();
  for (const auto& [a, b] : tapped) taps.push_back(a + "<->" + b);
  json bytes = json::object();
  for (const auto& [l, n] : captured_bytes) bytes[l.first + "<->" + l.second] = n;
  json vs = json::array();
  for (const auto& v : verdicts)
    vs.push_back({{"subject", v.subject.str()},
                  {"patch_index", v.patch_index},
                  {"reconstructable", v.reconstructable},
                  {"verified", v.verified}});
  return {{"tapped", taps},
          {"captured_bytes", bytes},
          {"verdicts", vs},
          {"reconstructable", reconstructable_count()}};
}

namespace {

struct Captured {
  std::optional<vss::ShareGrid> auth;
  std::map<std::uint8_t, std::map<std::uint8_t, vss::ShareGrid>> subgrids;  // patch -> index -> grid
};

vss::ShareGrid decode_grid(const json& v) {
  return share_format::decode(bridge::base64_decode(v.get<std::string>()));
}

}  // namespace

WiretapObservation wiretap_audit(const SimResult& result, const std::set<Link>& tapped) {
  WiretapObservation obs;
  obs.tapped = tapped;
  std::map<SubjectId, Captured> seen;
  for (const auto& m : result.trace) {
    const Link link = make_link(m.src, m.dst);
    if (!tapped.contains(link)) continue;
    std::size_t& bytes = obs.captured_bytes[link];
    if (m.type == MessageType::AS_DISPATCH) {
      for (const auto& h : m.payload.at("handles")) {
        auto g = decode_grid(h.at("grid"));
        bytes += g.bytes.size();
        seen[g.subject].auth = std::move(g);
      }
    } else if (m.type == MessageType::PS_RESPONSE) {
      auto g = decode_grid(m.payload.at("grid"));
      bytes += g.bytes.size();
      seen[g.subject].subgrids[g.patch_index][g.subgrid_index] = std::move(g);
    }
  }

  for (const auto& [subject, cap] : seen) {
    auto truth = result.truth.find(subject);
    if (truth == result.truth.end()) continue;
    const auto& t = truth->second;
    const auto structure = access::build_voidface_structure(t.patches.size());
    access::ShareSet held = cap.auth ? access::kAuthBit : 0;
    for (const auto& [patch, grids] : cap.subgrids) {
      const auto total = grids.begin()->second.subgrid_total;
      if (grids.size() == total) held |= access::private_bit(patch);
    }
    for (std::size_t p = 0; p < t.patches.size(); ++p) {
      if (!cap.auth && !cap.subgrids.contains(static_cast<std::uint8_t>(p))) continue;
      PatchVerdict v{subject, static_cast<std::uint8_t>(p)};
      v.reconstructable = access::is_qualified(structure, p, held);
      if (v.reconstructable) {
        std::vector<Byte> acc = cap.auth->bytes;
        for (const auto& [idx, g] : cap.subgrids.at(static_cast<std::uint8_t>(p)))
          for (std::size_t k = 0; k < acc.size() && k < g.bytes.size(); ++k) acc[k] ^= g.bytes[k];
        v.verified = acc == t.patches[p].pixels;
      }
      obs.verdicts.push_back(v);
    }
  }
  return obs;
}

std::vector<Link> lateral_workstation_links(const SimResult& result) {
  std::set<Link> out;
  auto is_ws = [&](const NodeId& n) {
    auto it = result.roles.find(n);
    return it != result.roles.end() && it->second == NodeRole::workstation;
  };
  for (const auto& m : result.trace)
    if (is_ws(m.src) && is_ws(m.dst)) out.insert(make_link(m.src, m.dst));
  return {out.begin(), out.end()};
}

std::vector<Link> unsafe_single_links(const SimResult& result) {
  std::set<Link> links;
  for (const auto& m : result.trace)
    if (m.src != kNetworkNode && m.dst != kNetworkNode) links.insert(make_link(m.src, m.dst));
  std::vector<Link> out;
  for (const auto& l : links)
    if (wiretap_audit(result, {l}).reconstructable_count() > 0) out.push_back(l);
  return out;
}

std::vector<std::uint64_t> conservation_violations(const SimResult& result) {
  std::map<std::uint64_t, std::size_t> replies;
  for (const auto& m : result.trace)
    if ((m.type == MessageType::PS_RESPONSE || m.type == MessageType::ERROR) &&
        m.payload.contains("in_reply_to"))
      ++replies[m.payload.at("in_reply_to").get<std::uint64_t>()];
  std::vector<std::uint64_t> out;
  for (const auto& m : result.trace)
    if (m.type == MessageType::PS_FETCH && !m.dropped && m.sim_time <= result.end_time &&
        replies[m.msg_id] != 1)
      out.push_back(m.msg_id);
  return out;
}

}  // namespace voidface::sim
