/*
 * controller.hpp
 *
 * Partition-based memoryless strategies: one cell per winning box with
 * its set of valid control indices.  Lookup unions the control sets of
 * every cell containing the query point, so points on shared faces get
 * the union of the touching cells.  The on-disk format is JSON with
 * every float written as a hexadecimal literal; save/load round trips
 * are bit-exact.
 */

#ifndef REACHSTAY_CONTROLLER_HPP
#define REACHSTAY_CONTROLLER_HPP

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "reachstay/paver.hpp"
#include "reachstay/synth.hpp"

namespace reachstay {

inline constexpr int kControllerFormatVersion = 1;

inline std::string hexfloat(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

inline double parse_hexfloat(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw std::runtime_error("controller file: bad float literal '" + s + "'");
  return v;
}

class Controller {
 public:
  Controller() = default;

  Controller(std::vector<ControlEntry> cells, std::vector<std::vector<double>> controls,
             int state_dim)
      : cells_(std::move(cells)), controls_(std::move(controls)), state_dim_(state_dim) {
    rebuild_index();
  }

  const std::vector<ControlEntry>& cells() const { return cells_; }
  const std::vector<std::vector<double>>& controls() const { return controls_; }
  int state_dim() const { return state_dim_; }

  std::string system_hash;
  double epsilon = 0.0;
  double delta = 0.0;
  nlohmann::ordered_json spec = nlohmann::ordered_json::object();

  /* union of the control sets of every cell containing x */
  std::vector<std::uint32_t> lookup(const std::vector<double>& x) const {
    std::vector<std::uint32_t> out;
    if (x.size() != static_cast<std::size_t>(state_dim_)) return out;
    Box q(state_dim_);
    for (int i = 0; i < state_dim_; ++i) q[i] = Interval(x[i]);
    std::vector<std::uint32_t> hits;
    index_.query(q, hits);
    for (auto id : hits) {
      const auto& e = cells_[id];
      if (!e.box.contains(x)) continue;
      out.insert(out.end(), e.controls.begin(), e.controls.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  void rebuild_index() {
    boxes_ = std::make_shared<std::vector<Box>>();
    boxes_->reserve(cells_.size());
    for (const auto& e : cells_) boxes_->push_back(e.box);
    index_ = PaverIndex(boxes_.get());
  }

 private:
  std::vector<ControlEntry> cells_;
  std::vector<std::vector<double>> controls_;
  int state_dim_ = 0;
  std::shared_ptr<std::vector<Box>> boxes_;
  PaverIndex index_;
};

/*
 * Strategy extraction: the table's cells become the controller verbatim.
 * An empty winning set is the unrealizability verdict at this precision.
 */
inline Controller extract(const SynthResult& res, const SystemModel& sys, double epsilon) {
  if (res.winning.empty())
    throw std::runtime_error("extract: " + (res.message.empty()
                                                ? std::string("specification not realizable "
                                                              "at this precision")
                                                : res.message));
  Controller c(res.table.entries, sys.controls, sys.state_dim);
  c.system_hash = sys.system_hash();
  c.epsilon = epsilon;
  c.delta = sys.delta;
  return c;
}

namespace detail {

inline nlohmann::ordered_json controller_payload(const Controller& c) {
  nlohmann::ordered_json controls = nlohmann::ordered_json::array();
  for (const auto& u : c.controls()) {
    nlohmann::ordered_json v = nlohmann::ordered_json::array();
    for (double x : u) v.push_back(hexfloat(x));
    controls.push_back(v);
  }
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& e : c.cells()) {
    nlohmann::ordered_json lo = nlohmann::ordered_json::array();
    nlohmann::ordered_json hi = nlohmann::ordered_json::array();
    for (const auto& d : e.box.dims) {
      lo.push_back(hexfloat(d.lo));
      hi.push_back(hexfloat(d.hi));
    }
    cells.push_back({{"lo", lo}, {"hi", hi}, {"controls", e.controls}});
  }
  return {{"controls", controls}, {"cells", cells}};
}

} // namespace detail

inline void save_controller(const Controller& c, const std::string& path) {
  nlohmann::ordered_json payload = detail::controller_payload(c);
  char digest[32];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(fnv1a(payload.dump())));
  nlohmann::ordered_json doc;
  doc["format_version"] = kControllerFormatVersion;
  doc["metadata"] = {{"system_hash", c.system_hash},
                     {"epsilon", hexfloat(c.epsilon)},
                     {"delta", hexfloat(c.delta)},
                     {"spec", c.spec}};
  doc["digest"] = digest;
  doc["controls"] = payload["controls"];
  doc["cells"] = payload["cells"];
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_controller: cannot open " + path);
  out << doc.dump(1) << "\n";
}

inline Controller load_controller(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_controller: cannot open " + path);
  nlohmann::ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_controller: malformed file: " + std::string(e.what()));
  }
  if (!doc.contains("format_version") ||
      doc["format_version"].get<int>() != kControllerFormatVersion)
    throw std::runtime_error("load_controller: unsupported format version");

  std::vector<std::vector<double>> controls;
  for (const auto& u : doc["controls"]) {
    std::vector<double> v;
    for (const auto& s : u) v.push_back(parse_hexfloat(s.get<std::string>()));
    controls.push_back(v);
  }
  std::vector<ControlEntry> cells;
  int dim = 0;
  for (const auto& cell : doc["cells"]) {
    ControlEntry e;
    const auto& lo = cell["lo"];
    const auto& hi = cell["hi"];
    dim = static_cast<int>(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i)
      e.box.dims.push_back(Interval(parse_hexfloat(lo[i].get<std::string>()),
                                    parse_hexfloat(hi[i].get<std::string>())));
    for (const auto& u : cell["controls"]) e.controls.push_back(u.get<std::uint32_t>());
    cells.push_back(std::move(e));
  }

  Controller c(std::move(cells), std::move(controls), dim);
  c.system_hash = doc["metadata"]["system_hash"].get<std::string>();
  c.epsilon = parse_hexfloat(doc["metadata"]["epsilon"].get<std::string>());
  c.delta = parse_hexfloat(doc["metadata"]["delta"].get<std::string>());
  c.spec = doc["metadata"]["spec"];

  char digest[32];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(
                    fnv1a(detail::controller_payload(c).dump())));
  if (doc["digest"].get<std::string>() != digest)
    throw std::runtime_error("load_controller: digest mismatch (corrupted file)");
  return c;
}

} // namespace reachstay

#endif
