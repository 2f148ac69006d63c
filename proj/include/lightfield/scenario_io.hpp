// Copyright 2026 The Lightfield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LIGHTFIELD_SCENARIO_IO_HPP
#define LIGHTFIELD_SCENARIO_IO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <zlib.h>

#include <json.hpp>

#include "lightfield/csv.hpp"
#include "lightfield/error.hpp"
#include "lightfield/fieldmap.hpp"
#include "lightfield/footprint.hpp"
#include "lightfield/geo.hpp"
#include "lightfield/interpolation.hpp"
#include "lightfield/lightmodel.hpp"
#include "lightfield/optimizer.hpp"
#include "lightfield/scenario.hpp"

namespace lightfield {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Scenario JSON

inline json point_to_json(const GeoPoint& p) { return json{{"lat", p.lat_deg}, {"lon", p.lon_deg}}; }

inline GeoPoint point_from_json(const json& j) {
  if (j.is_array() && j.size() == 2) return checked_point(j.at(0).get<double>(), j.at(1).get<double>());
  return checked_point(j.at("lat").get<double>(), j.at("lon").get<double>());
}

inline json ring_to_json(const GeoPolygon& poly) {
  json ring = json::array();
  for (const GeoPoint& p : poly.ring()) ring.push_back(json::array({p.lat_deg, p.lon_deg}));
  return ring;
}

inline GeoPolygon ring_from_json(const json& j) {
  std::vector<GeoPoint> ring;
  for (const json& v : j) ring.push_back(point_from_json(v));
  return GeoPolygon(std::move(ring));
}

inline json source_to_json(const LightSource& s) {
  json j{{"id", s.id},         {"lat", s.position.lat_deg}, {"lon", s.position.lon_deg},
         {"i0", s.params.i0},  {"c1", s.params.c1},         {"c2", s.params.c2}};
  if (s.profile_id) j["profile"] = *s.profile_id;
  return j;
}

/// Sources may name a profile and omit i0/c1/c2; explicit values win otherwise.
inline LightSource source_from_json(const json& j, double alpha) {
  LightSource s;
  s.id = j.at("id").get<std::string>();
  s.position = checked_point(j.at("lat").get<double>(), j.at("lon").get<double>());
  if (j.contains("profile") && !j.at("profile").is_null()) {
    s.profile_id = j.at("profile").get<int>();
    s.params = profile_params(*s.profile_id, alpha);
  }
  s.params.alpha = alpha;
  if (j.contains("i0")) s.params.i0 = j.at("i0").get<double>();
  if (j.contains("c1")) s.params.c1 = j.at("c1").get<double>();
  if (j.contains("c2")) s.params.c2 = j.at("c2").get<double>();
  validate(s.params);
  if (!s.profile_consistent()) {
    throw Error(ErrorCode::InvalidArgument, "source '" + s.id + "' params disagree with its profile");
  }
  return s;
}

inline json scenario_to_json(const Scenario& s) {
  json sources = json::array();
  for (const auto& src : s.sources) sources.push_back(source_to_json(src));
  json areas = json::array();
  for (const auto& a : s.protected_areas) areas.push_back(json{{"name", a.name}, {"ring", ring_to_json(a.polygon)}});
  return json{{"id", s.id},
              {"bbox", json{{"min", point_to_json(s.bbox.min)}, {"max", point_to_json(s.bbox.max)}}},
              {"cell_size_m", s.cell_size_m},
              {"alpha", s.alpha},
              {"sources", sources},
              {"protected_areas", areas}};
}

/// Parses and validates a scenario object. Schema problems surface as
/// InvalidArgument so callers can map them to a 400.
inline Scenario scenario_from_json(const json& j) {
  try {
    Scenario s;
    s.id = j.at("id").get<std::string>();
    s.bbox = {point_from_json(j.at("bbox").at("min")), point_from_json(j.at("bbox").at("max"))};
    s.cell_size_m = j.value("cell_size_m", 10.0);
    s.alpha = j.value("alpha", kDefaultAlpha);
    if (j.contains("sources")) {
      for (const json& src : j.at("sources")) s.sources.push_back(source_from_json(src, s.alpha));
    }
    if (j.contains("protected_areas")) {
      for (const json& a : j.at("protected_areas")) {
        s.protected_areas.push_back({a.at("name").get<std::string>(), ring_from_json(a.at("ring"))});
      }
    }
    validate(s);
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("scenario schema: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Revisioned documents

inline std::string checksum_of(std::string_view text) {
  const uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return std::string("crc32:") + buf;
}

struct ScenarioDocument {
  Scenario scenario;
  std::uint64_t revision = 0;
};

inline std::string document_to_string(const Scenario& s, std::uint64_t revision) {
  const json body = scenario_to_json(s);
  json doc{{"format_version", kFormatVersion},
           {"revision", revision},
           {"checksum", checksum_of(body.dump())},
           {"scenario", body}};
  return doc.dump(2) + "\n";
}

inline ScenarioDocument document_from_string(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptDocument, std::string("unparseable scenario document: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::CorruptDocument, "unsupported format_version");
    }
    const json& body = doc.at("scenario");
    if (checksum_of(body.dump()) != doc.at("checksum").get<std::string>()) {
      throw Error(ErrorCode::CorruptDocument, "checksum mismatch");
    }
    return {scenario_from_json(body), doc.at("revision").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptDocument, std::string("scenario document: ") + e.what());
  }
}

inline bool valid_scenario_id(std::string_view id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

/// One JSON document per scenario under `root`, named `<id>.json`. Writers are
/// serialized with a compare-and-set on the revision; readers never block
/// because each save lands through an atomic rename.
class ScenarioStore {
 public:
  explicit ScenarioStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create store root " + root_.string() + ": " + ec.message());
  }

  const std::filesystem::path& root() const noexcept { return root_; }

  std::filesystem::path path_for(const std::string& id) const {
    if (!valid_scenario_id(id)) throw Error(ErrorCode::InvalidArgument, "invalid scenario id '" + id + "'");
    return root_ / (id + ".json");
  }

  bool exists(const std::string& id) const { return std::filesystem::exists(path_for(id)); }

  ScenarioDocument load(const std::string& id) const {
    const auto path = path_for(id);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "no scenario '" + id + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return document_from_string(buf.str());
  }

  /// Writes a new revision. `expected_revision` must match the stored one
  /// (absent or 0 means "create"); returns the new revision.
  std::uint64_t save(const Scenario& scenario, std::optional<std::uint64_t> expected_revision = std::nullopt) {
    validate(scenario);
    std::lock_guard<std::mutex> lock(mutex_);
    const auto path = path_for(scenario.id);
    std::uint64_t current = 0;
    if (std::filesystem::exists(path)) current = load(scenario.id).revision;
    const std::uint64_t expected = expected_revision.value_or(0);
    if (expected != current) {
      throw Error(ErrorCode::StaleRevision, "scenario '" + scenario.id + "' is at revision " +
                                                std::to_string(current) + ", not " + std::to_string(expected));
    }
    const std::uint64_t next = current + 1;
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp);
      out << document_to_string(scenario, next);
      if (!out) throw Error(ErrorCode::Io, "short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot commit " + path.string() + ": " + ec.message());
    return next;
  }

  std::vector<std::string> list() const {
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(root_)) {
      if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }

 private:
  std::filesystem::path root_;
  std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Layout import

struct RejectedRow {
  std::size_t line = 0;  // CSV line number, or 1-based feature index for GeoJSON
  std::string reason;
};

struct ImportReport {
  std::size_t input_rows = 0;
  std::size_t accepted = 0;
  std::vector<RejectedRow> rejected;
  std::map<int, std::size_t> profile_histogram;
};

struct ImportResult {
  std::vector<LightSource> sources;
  ImportReport report;
};

namespace detail {

inline std::optional<std::string> check_coordinates(double lat, double lon) {
  if (!std::isfinite(lat) || lat < -90.0 || lat > 90.0) return "latitude out of range";
  if (!std::isfinite(lon) || lon < -180.0 || lon > 180.0) return "longitude out of range";
  return std::nullopt;
}

}  // namespace detail

/// Reads `id,lat,lon[,profile]` rows. Extra columns are ignored; bad rows are
/// reported with their line number and skipped.
inline ImportResult import_sources_csv(std::string_view bytes, int default_profile, double alpha = kDefaultAlpha) {
  profile(default_profile);
  const auto rows = csv::lines(bytes);
  if (rows.empty()) throw Error(ErrorCode::EmptyFile, "layout file is empty");
  const auto header = csv::fields(rows.front().text);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(csv::trim(header[i])), i);
  for (const char* required : {"id", "lat", "lon"}) {
    if (!col.count(required)) {
      throw Error(ErrorCode::MalformedHeader, std::string("layout header lacks column '") + required + "'");
    }
  }
  const std::size_t profile_col = col.count("profile") ? col["profile"] : std::string::npos;

  ImportResult out;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    ++out.report.input_rows;
    const std::size_t line = rows[r].number;
    const auto f = csv::fields(rows[r].text);
    auto cell = [&](std::size_t c) -> std::string_view { return c < f.size() ? csv::trim(f[c]) : std::string_view{}; };
    auto reject = [&](std::string reason) { out.report.rejected.push_back({line, std::move(reason)}); };

    const std::string id(cell(col["id"]));
    if (id.empty()) {
      reject("missing id");
      continue;
    }
    const auto lat = csv::to_double(cell(col["lat"]));
    const auto lon = csv::to_double(cell(col["lon"]));
    if (!lat || !lon) {
      reject("unparseable coordinate");
      continue;
    }
    if (auto bad = detail::check_coordinates(*lat, *lon)) {
      reject(*bad);
      continue;
    }
    int prof = default_profile;
    if (profile_col != std::string::npos && !cell(profile_col).empty()) {
      const auto p = csv::to_int(cell(profile_col));
      if (!p || *p < 1 || *p > static_cast<int>(kProfiles.size())) {
        reject("unknown profile");
        continue;
      }
      prof = *p;
    }
    if (!seen.insert(id).second) {
      reject("duplicate id");
      continue;
    }
    out.sources.push_back(make_source(id, {*lat, *lon}, prof, alpha));
    ++out.report.profile_histogram[prof];
  }
  out.report.accepted = out.sources.size();
  return out;
}

/// One lamp per Point feature of a FeatureCollection; the optional `profile`
/// and `id` properties are honored.
inline ImportResult import_sources_geojson(std::string_view bytes, int default_profile,
                                           double alpha = kDefaultAlpha) {
  profile(default_profile);
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::NotAFeatureCollection, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc.at("features").is_array()) {
    throw Error(ErrorCode::NotAFeatureCollection, "document is not a GeoJSON FeatureCollection");
  }
  ImportResult out;
  std::set<std::string> seen;
  std::size_t index = 0;
  for (const json& feature : doc.at("features")) {
    ++index;
    ++out.report.input_rows;
    auto reject = [&](std::string reason) { out.report.rejected.push_back({index, std::move(reason)}); };
    if (!feature.is_object() || !feature.contains("geometry") || !feature.at("geometry").is_object()) {
      reject("feature has no geometry");
      continue;
    }
    const json& geom = feature.at("geometry");
    const std::string type = geom.value("type", "");
    if (type != "Point") {
      reject("geometry type " + (type.empty() ? std::string("(none)") : type) + " is not a Point");
      continue;
    }
    const json& coords = geom.value("coordinates", json());
    if (!coords.is_array() || coords.size() < 2 || !coords.at(0).is_number() || !coords.at(1).is_number()) {
      reject("unparseable coordinate");
      continue;
    }
    const double lon = coords.at(0).get<double>(), lat = coords.at(1).get<double>();
    if (auto bad = detail::check_coordinates(lat, lon)) {
      reject(*bad);
      continue;
    }
    const json props = feature.value("properties", json::object());
    std::string id;
    if (props.is_object() && props.contains("id")) {
      id = props.at("id").is_string() ? props.at("id").get<std::string>() : props.at("id").dump();
    } else if (feature.contains("id")) {
      id = feature.at("id").is_string() ? feature.at("id").get<std::string>() : feature.at("id").dump();
    } else {
      id = "f" + std::to_string(index);
    }
    int prof = default_profile;
    if (props.is_object() && props.contains("profile") && !props.at("profile").is_null()) {
      const json& p = props.at("profile");
      std::optional<int> v;
      if (p.is_number_integer()) v = p.get<int>();
      if (p.is_string()) v = csv::to_int(p.get<std::string>());
      if (!v || *v < 1 || *v > static_cast<int>(kProfiles.size())) {
        reject("unknown profile");
        continue;
      }
      prof = *v;
    }
    if (!seen.insert(id).second) {
      reject("duplicate id");
      continue;
    }
    out.sources.push_back(make_source(id, {lat, lon}, prof, alpha));
    ++out.report.profile_histogram[prof];
  }
  out.report.accepted = out.sources.size();
  return out;
}

inline json import_report_to_json(const ImportReport& r) {
  json rejected = json::array();
  for (const auto& row : r.rejected) rejected.push_back(json{{"line", row.line}, {"reason", row.reason}});
  json hist = json::object();
  for (const auto& [p, n] : r.profile_histogram) hist[std::to_string(p)] = n;
  return json{{"input_rows", r.input_rows}, {"accepted", r.accepted}, {"rejected", rejected}, {"profile_histogram", hist}};
}

/// Deterministic street-grid layout for load tests: `count` lamps on a
/// square lattice of streets around `center`, spaced `spacing_m` apart, with
/// profiles cycling by street class. Not a model of any real county.
inline std::vector<LightSource> synthetic_layout(const GeoPoint& center, std::size_t count, std::uint64_t seed = 0,
                                                 double spacing_m = 30.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-2.0, 2.0);
  const LocalFrame frame(center);
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
  std::vector<LightSource> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t r = i / side, c = i % side;
    const Vec2 v{(static_cast<double>(c) - 0.5 * side) * spacing_m + jitter(rng),
                 (static_cast<double>(r) - 0.5 * side) * spacing_m + jitter(rng)};
    const int prof = static_cast<int>((r % 5) + 1);
    char id[32];
    std::snprintf(id, sizeof id, "S%06zu", i);
    out.push_back(make_source(id, frame.unproject(v), prof));
  }
  return out;
}

inline std::string layout_to_csv(const std::vector<LightSource>& sources) {
  std::string out = "id,lat,lon,profile\n";
  char buf[128];
  for (const auto& s : sources) {
    std::snprintf(buf, sizeof buf, ",%.9f,%.9f,", s.position.lat_deg, s.position.lon_deg);
    out += s.id + buf + (s.profile_id ? std::to_string(*s.profile_id) : std::string()) + "\n";
  }
  return out;
}

inline std::string layout_to_geojson(const std::vector<LightSource>& sources) {
  json features = json::array();
  for (const auto& s : sources) {
    json props{{"id", s.id}};
    if (s.profile_id) props["profile"] = *s.profile_id;
    features.push_back(json{{"type", "Feature"},
                            {"geometry", {{"type", "Point"}, {"coordinates", {s.position.lon_deg, s.position.lat_deg}}}},
                            {"properties", props}});
  }
  return json{{"type", "FeatureCollection"}, {"features", features}}.dump();
}

// ---------------------------------------------------------------------------
// Optimization, footprint, interpolation and hotspot payloads

/// Reads an optimization spec. `target` may be {"area": name},
/// {"polygon": [[lat, lon], ...]} or {"points": [[lat, lon], ...]}; when
/// omitted, the scenario's first protected area is used.
inline OptimizationSpec optimization_spec_from_json(const json& j, const Scenario& scenario) {
  try {
    OptimizationSpec spec;
    spec.mode = parse_mode(j.at("mode").get<std::string>());
    spec.slack_R_m = j.value("slack_R_m", 50.0);
    spec.omega = j.value("omega", 0.2);
    spec.max_iters = j.value("max_iters", 200);
    spec.tolerance = j.value("tolerance", 1e-6);
    if (j.contains("target")) {
      const json& t = j.at("target");
      if (t.contains("area")) spec.target = Target::of(scenario.area(t.at("area").get<std::string>()).polygon);
      if (t.contains("polygon")) spec.target.polygon = ring_from_json(t.at("polygon"));
      if (t.contains("points")) {
        for (const json& p : t.at("points")) spec.target.points.push_back(point_from_json(p));
      }
    } else if (!scenario.protected_areas.empty()) {
      spec.target = Target::of(scenario.protected_areas.front().polygon);
    }
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("optimization spec schema: ") + e.what());
  }
}

inline json optimization_result_to_json(const OptimizationResult& r) {
  json sources = json::array();
  for (std::size_t i = 0; i < r.sources.size(); ++i) {
    const LightSource& after = r.sources[i];
    const LightSource& before = r.sources_before[i];
    json row{{"id", after.id},
             {"before", {{"lat", before.position.lat_deg}, {"lon", before.position.lon_deg},
                         {"c1", before.params.c1}, {"c2", before.params.c2}}},
             {"after", {{"lat", after.position.lat_deg}, {"lon", after.position.lon_deg},
                        {"c1", after.params.c1}, {"c2", after.params.c2}}}};
    for (const auto& res : r.residuals) {
      if (res.source_id != after.id) continue;
      row["g_residual"] = res.g;
      if (res.h) row["h_residual"] = *res.h;
    }
    sources.push_back(row);
  }
  json trace = json::array();
  for (const auto& t : r.trace) {
    trace.push_back({{"iteration", t.iteration}, {"objective", t.objective}, {"max_violation", t.max_violation},
                     {"merit_before", t.merit_before}, {"merit_after", t.merit_after}});
  }
  return json{{"mode", std::string(mode_name(r.mode))},
              {"converged", r.converged},
              {"status", r.status},
              {"iterations", r.iterations},
              {"objective_before", r.objective_before},
              {"objective_after", r.objective_after},
              {"sources", sources},
              {"trace", trace}};
}

inline json footprint_report_to_json(const FootprintReport& r) {
  json rows = json::array();
  for (const auto& e : r.per_source) rows.push_back({{"source_id", e.source_id}, {"footprint", e.footprint}});
  json j{{"area", r.area_name},
         {"kernel", std::string(kernel_name(r.kernel.kind))},
         {"cell_size_m", r.cell_size_m},
         {"area_total", r.area_total},
         {"per_source", rows}};
  if (r.kernel.kind == KernelKind::InverseSquare) j["mount_height_m"] = r.kernel.mount_height_m;
  return j;
}

/// `source_id,footprint` rows in ledger order.
inline std::string footprint_report_to_csv(const FootprintReport& r) {
  std::string out = "source_id,footprint\n";
  char buf[64];
  for (const auto& e : r.per_source) {
    std::snprintf(buf, sizeof buf, ",%.10g\n", e.footprint);
    out += e.source_id + buf;
  }
  return out;
}

inline json loo_report_to_json(const LooReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    json row{{"index", f.index}, {"lat", f.position.lat_deg}, {"lon", f.position.lon_deg}, {"actual", f.actual}};
    if (f.estimate) {
      row["estimate"] = *f.estimate;
      row["abs_error"] = f.abs_error;
    } else {
      row["estimate"] = nullptr;
      row["error"] = f.error;
    }
    if (f.error_variance_pct) row["error_variance_pct"] = *f.error_variance_pct;
    folds.push_back(row);
  }
  json j{{"method", std::string(method_name(r.method.kind))},
         {"power", r.method.power},
         {"folds", folds},
         {"mean_abs_error", r.mean_abs_error},
         {"failed", r.failed}};
  if (r.baseline) j["baseline"] = *r.baseline;
  if (r.mean_error_variance_pct) j["mean_error_variance_pct"] = *r.mean_error_variance_pct;
  return j;
}

inline json hotspots_to_json(const std::vector<HotspotRegion>& regions) {
  json out = json::array();
  for (const auto& r : regions) {
    out.push_back({{"cell_count", r.count()}, {"centroid", point_to_json(r.centroid)}});
  }
  return out;
}

}  // namespace lightfield

#endif  // LIGHTFIELD_SCENARIO_IO_HPP
