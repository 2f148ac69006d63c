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

#ifndef LIGHTFIELD_SERVICE_HPP
#define LIGHTFIELD_SERVICE_HPP

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <ctime>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "lightfield/error.hpp"
#include "lightfield/fieldmap.hpp"
#include "lightfield/footprint.hpp"
#include "lightfield/optimizer.hpp"
#include "lightfield/png.hpp"
#include "lightfield/scenario.hpp"
#include "lightfield/scenario_io.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace lightfield::service {

enum class JobState { Queued, Running, Done, Failed };

inline constexpr std::string_view state_name(JobState s) {
  switch (s) {
    case JobState::Queued: return "queued";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "failed";
}

inline std::string iso_time(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Job {
  std::string id;
  std::string kind = "optimize";
  JobState state = JobState::Queued;
  std::string scenario_id;
  std::uint64_t revision = 0;  // revision of the snapshot the job ran against
  std::chrono::system_clock::time_point submitted;
  std::optional<std::chrono::system_clock::time_point> finished;
  std::optional<json> result;
  std::optional<json> error;
};

inline json job_to_json(const Job& j) {
  json out{{"id", j.id},
           {"kind", j.kind},
           {"state", std::string(state_name(j.state))},
           {"scenario_id", j.scenario_id},
           {"revision", j.revision},
           {"submitted", iso_time(j.submitted)},
           {"finished", j.finished ? json(iso_time(*j.finished)) : json(nullptr)}};
  if (j.result) out["result"] = *j.result;
  if (j.error) out["error"] = *j.error;
  return out;
}

inline json error_body(ErrorCode code, const std::string& message, json detail = nullptr) {
  return json{{"code", std::string(to_string(code))}, {"message", message}, {"detail", std::move(detail)}};
}

/// Fixed-size pool running optimization jobs in submission order. Each job
/// owns a copy of the scenario it was submitted against.
class JobRunner {
 public:
  explicit JobRunner(std::size_t workers = 2) {
    if (workers == 0) throw Error(ErrorCode::InvalidArgument, "job pool needs at least one worker");
    for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this] { work(); });
  }

  JobRunner(const JobRunner&) = delete;
  JobRunner& operator=(const JobRunner&) = delete;

  ~JobRunner() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  std::string submit(Scenario snapshot, std::uint64_t revision, OptimizationSpec spec) {
    std::lock_guard<std::mutex> lock(mutex_);
    char id[32];
    std::snprintf(id, sizeof id, "job-%06llu", static_cast<unsigned long long>(++counter_));
    auto entry = std::make_shared<Entry>();
    entry->job.id = id;
    entry->job.scenario_id = snapshot.id;
    entry->job.revision = revision;
    entry->job.submitted = std::chrono::system_clock::now();
    entry->scenario = std::move(snapshot);
    entry->spec = std::move(spec);
    jobs_.emplace(entry->job.id, entry);
    queue_.push_back(entry);
    cv_.notify_one();
    spdlog::info("job {} queued for scenario {} at revision {}", entry->job.id, entry->job.scenario_id, revision);
    return entry->job.id;
  }

  std::optional<Job> get(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second->job;
  }

  /// Blocks until the job leaves the queued/running states or the timeout hits.
  std::optional<Job> wait(const std::string& id, std::chrono::milliseconds timeout) const {
    std::unique_lock<std::mutex> lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    const auto entry = it->second;
    done_cv_.wait_for(lock, timeout, [&] {
      return entry->job.state == JobState::Done || entry->job.state == JobState::Failed;
    });
    return entry->job;
  }

  std::size_t workers() const noexcept { return threads_.size(); }

  /// Highest number of jobs seen running at once.
  std::size_t peak_running() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return peak_running_;
  }

  /// Job ids in the order workers picked them up.
  std::vector<std::string> start_order() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return start_order_;
  }

 private:
  struct Entry {
    Job job;
    Scenario scenario;
    OptimizationSpec spec;
  };

  void work() {
    for (;;) {
      std::shared_ptr<Entry> entry;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (stopping_) return;
        entry = queue_.front();
        queue_.pop_front();
        entry->job.state = JobState::Running;
        start_order_.push_back(entry->job.id);
        peak_running_ = std::max(peak_running_, ++running_);
      }
      std::optional<json> result, error;
      try {
        result = optimization_result_to_json(solve(entry->scenario, entry->spec));
      } catch (const Error& e) {
        error = error_body(e.code(), e.what());
      } catch (const std::exception& e) {
        error = error_body(ErrorCode::InvalidArgument, e.what());
      }
      {
        std::lock_guard<std::mutex> lock(mutex_);
        --running_;
        entry->job.finished = std::chrono::system_clock::now();
        entry->job.result = std::move(result);
        entry->job.error = std::move(error);
        entry->job.state = entry->job.error ? JobState::Failed : JobState::Done;
        spdlog::info("job {} {}", entry->job.id, state_name(entry->job.state));
      }
      done_cv_.notify_all();
    }
  }

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  mutable std::condition_variable done_cv_;
  std::deque<std::shared_ptr<Entry>> queue_;
  std::map<std::string, std::shared_ptr<Entry>> jobs_;
  std::vector<std::string> start_order_;
  std::uint64_t counter_ = 0;
  std::size_t running_ = 0;
  std::size_t peak_running_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

struct ServiceConfig {
  std::filesystem::path root = "scenarios";
  std::size_t jobs = 2;
};

/// Parses "host:port"; a bare port binds every interface.
inline std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  std::string host = colon == std::string::npos ? "0.0.0.0" : bind.substr(0, colon);
  const std::string port_text = colon == std::string::npos ? bind : bind.substr(colon + 1);
  const auto port = csv::to_int(port_text);
  if (!port || *port < 0 || *port > 65535) throw Error(ErrorCode::InvalidArgument, "bad bind address '" + bind + "'");
  if (host.empty()) host = "0.0.0.0";
  return {host, *port};
}

/// HTTP front end over a ScenarioStore. Reads go through immutable snapshots;
/// writes to one scenario id are serialized.
class Service {
 public:
  explicit Service(ServiceConfig config) : config_(std::move(config)), store_(config_.root), runner_(config_.jobs) {
    routes();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;
  ~Service() { stop(); }

  httplib::Server& server() noexcept { return server_; }
  ScenarioStore& store() noexcept { return store_; }
  JobRunner& jobs() noexcept { return runner_; }

  bool listen(const std::string& host, int port) {
    spdlog::info("listening on {}:{}", host, port);
    return server_.listen(host, port);
  }

  int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() {
    if (server_.is_running()) server_.stop();
  }

 private:
  struct Snapshot {
    Scenario scenario;
    std::uint64_t revision = 0;
  };
  using SnapshotPtr = std::shared_ptr<const Snapshot>;

  SnapshotPtr snapshot(const std::string& id) {
    {
      std::lock_guard<std::mutex> lock(cache_mutex_);
      auto it = snapshots_.find(id);
      if (it != snapshots_.end()) return it->second;
    }
    auto doc = store_.load(id);
    auto snap = std::make_shared<const Snapshot>(Snapshot{std::move(doc.scenario), doc.revision});
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto [it, inserted] = snapshots_.emplace(id, snap);
    if (!inserted && it->second->revision < snap->revision) it->second = snap;
    return it->second;
  }

  std::mutex& write_lock(const std::string& id) {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto& m = write_locks_[id];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
  }

  std::uint64_t commit(const Scenario& scenario, std::uint64_t expected) {
    const std::uint64_t rev = store_.save(scenario, expected);
    std::lock_guard<std::mutex> lock(cache_mutex_);
    snapshots_[scenario.id] = std::make_shared<const Snapshot>(Snapshot{scenario, rev});
    return rev;
  }

  static int status_for(ErrorCode code, int fallback) {
    switch (code) {
      case ErrorCode::NotFound:
      case ErrorCode::UnknownSource: return 404;
      case ErrorCode::StaleRevision: return 409;
      case ErrorCode::Io:
      case ErrorCode::CorruptDocument:
      case ErrorCode::LinAlgFailure: return 500;
      default: return fallback;
    }
  }

  static void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, ErrorCode code, const std::string& message,
                         json detail = nullptr) {
    send_json(res, error_body(code, message, std::move(detail)), status);
  }

  /// Runs a handler, mapping library errors onto the uniform error body.
  /// `fallback` is the status for input errors not covered by status_for.
  template <typename F>
  static void guarded(httplib::Response& res, int fallback, F&& body) {
    try {
      body();
    } catch (const Error& e) {
      send_error(res, status_for(e.code(), fallback), e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, ErrorCode::InvalidArgument, std::string("malformed JSON: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, ErrorCode::Io, e.what());
    }
  }

  static json parse_body(const httplib::Request& req) { return json::parse(req.body); }

  static std::optional<double> query_double(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) return std::nullopt;
    auto v = csv::to_double(req.get_param_value(key));
    if (!v) throw Error(ErrorCode::InvalidArgument, std::string("query parameter '") + key + "' is not a number");
    return v;
  }

  static json scenario_payload(const Snapshot& snap) {
    json body = scenario_to_json(snap.scenario);
    body["revision"] = snap.revision;
    return body;
  }

  void routes() {
    server_.set_logger([](const httplib::Request& req, const httplib::Response& res) {
      spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
    });

    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, {{"ok", true}}); });

    server_.Get("/scenarios", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, 400, [&] { send_json(res, json{{"scenarios", store_.list()}}); });
    });

    server_.Post("/scenarios", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 400, [&] {
        const Scenario s = scenario_from_json(parse_body(req));
        std::lock_guard<std::mutex> lock(write_lock(s.id));
        if (store_.exists(s.id)) {
          send_error(res, 409, ErrorCode::StaleRevision, "scenario '" + s.id + "' already exists");
          return;
        }
        const std::uint64_t rev = commit(s, 0);
        res.set_header("Location", "/scenarios/" + s.id);
        send_json(res, {{"id", s.id}, {"revision", rev}}, 201);
      });
    });

    server_.Get(R"(/scenarios/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 400, [&] {
        const auto snap = snapshot(req.matches[1]);
        res.set_header("ETag", "\"r" + std::to_string(snap->revision) + "\"");
        send_json(res, scenario_payload(*snap));
      });
    });

    // Body: {"revision": n, "sources": [...]}; If-Match may carry the revision instead.
    server_.Put(R"(/scenarios/([^/]+)/sources)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 400, [&] {
        const std::string id = req.matches[1];
        const json body = parse_body(req);
        std::optional<std::uint64_t> expected;
        if (body.is_object() && body.contains("revision")) expected = body.at("revision").get<std::uint64_t>();
        if (!expected && req.has_header("If-Match")) {
          std::string tag = req.get_header_value("If-Match");
          std::erase_if(tag, [](char c) { return c == '"' || c == 'r' || c == 'W' || c == '/'; });
          if (auto v = csv::to_int(tag)) expected = static_cast<std::uint64_t>(*v);
        }
        if (!expected) throw Error(ErrorCode::InvalidArgument, "missing revision");
        const json& list = body.is_array() ? body : body.at("sources");
        std::lock_guard<std::mutex> lock(write_lock(id));
        const auto snap = snapshot(id);
        if (snap->revision != *expected) {
          send_error(res, 409, ErrorCode::StaleRevision, "scenario is at a newer revision",
                     {{"current_revision", snap->revision}});
          return;
        }
        Scenario next = snap->scenario;
        next.sources.clear();
        for (const json& j : list) next.sources.push_back(source_from_json(j, next.alpha));
        validate(next);
        const std::uint64_t rev = commit(next, *expected);
        send_json(res, {{"id", id}, {"revision", rev}});
      });
    });

    // ?format=csv|geojson&profile=N&mode=replace|append[&revision=n]
    server_.Post(R"(/scenarios/([^/]+)/import)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 400, [&] {
        const std::string id = req.matches[1];
        const std::string format = req.has_param("format") ? req.get_param_value("format") : "csv";
        const std::string mode = req.has_param("mode") ? req.get_param_value("mode") : "replace";
        if (mode != "replace" && mode != "append") throw Error(ErrorCode::InvalidArgument, "mode must be replace or append");
        int prof = 1;
        if (req.has_param("profile")) {
          auto p = csv::to_int(req.get_param_value("profile"));
          if (!p) throw Error(ErrorCode::InvalidArgument, "profile must be an integer");
          prof = *p;
        }
        std::lock_guard<std::mutex> lock(write_lock(id));
        const auto snap = snapshot(id);
        if (req.has_param("revision")) {
          auto r = csv::to_int(req.get_param_value("revision"));
          if (!r || static_cast<std::uint64_t>(*r) != snap->revision) {
            send_error(res, 409, ErrorCode::StaleRevision, "scenario is at a newer revision",
                       {{"current_revision", snap->revision}});
            return;
          }
        }
        ImportResult imported;
        if (format == "csv") {
          imported = import_sources_csv(req.body, prof, snap->scenario.alpha);
        } else if (format == "geojson") {
          imported = import_sources_geojson(req.body, prof, snap->scenario.alpha);
        } else {
          throw Error(ErrorCode::InvalidArgument, "format must be csv or geojson");
        }
        Scenario next = snap->scenario;
        if (mode == "replace") next.sources.clear();
        for (auto& s : imported.sources) next.sources.push_back(std::move(s));
        try {
          validate(next);
        } catch (const Error& e) {
          send_error(res, 422, e.code(), e.what(), import_report_to_json(imported.report));
          return;
        }
        const std::uint64_t rev = commit(next, snap->revision);
        json body = import_report_to_json(imported.report);
        body["revision"] = rev;
        send_json(res, body);
      });
    });

    server_.Get(R"(/scenarios/([^/]+)/tiles/(\d+)/(\d+)/(\d+)\.png)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, 400, [&] {
                    const auto snap = snapshot(req.matches[1]);
                    TileId tile{std::stoi(req.matches[2]), std::stol(req.matches[3]), std::stol(req.matches[4])};
                    validate_tile(tile);
                    const std::string etag = "\"r" + std::to_string(snap->revision) + "-" + std::to_string(tile.z) +
                                             "-" + std::to_string(tile.x) + "-" + std::to_string(tile.y) + "\"";
                    res.set_header("ETag", etag);
                    res.set_header("Cache-Control", "no-cache");
                    if (req.get_header_value("If-None-Match") == etag) {
                      res.status = 304;
                      return;
                    }
                    const auto bytes = tile_bytes(snap, req.matches[1], tile);
                    res.set_content(reinterpret_cast<const char*>(bytes->data()), bytes->size(), "image/png");
                  });
                });

    server_.Get(R"(/scenarios/([^/]+)/value)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 400, [&] {
        const auto snap = snapshot(req.matches[1]);
        const auto lat = query_double(req, "lat"), lon = query_double(req, "lon");
        if (!lat || !lon) throw Error(ErrorCode::InvalidArgument, "lat and lon are required");
        const GeoPoint p = checked_point(*lat, *lon);
        const Scenario& s = snap->scenario;
        const double v = s.sources.empty() ? (s.frame().project_checked(p), 0.0) : field_at(s, p);
        const double i0 = s.i0_max();
        send_json(res, {{"lat", p.lat_deg},
                        {"lon", p.lon_deg},
                        {"intensity", v},
                        {"sqm", intensity_to_sqm(v, i0)},
                        {"normalized", normalized_brightness(intensity_to_sqm(v, i0))},
                        {"revision", snap->revision}});
      });
    });

    // ?area=<name>&kernel=attenuation|inverse_square[&cell=1][&mount_height=10]
    server_.Get(R"(/scenarios/([^/]+)/footprint)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 400, [&] {
        const auto snap = snapshot(req.matches[1]);
        if (!req.has_param("area")) throw Error(ErrorCode::InvalidArgument, "area is required");
        IlluminanceKernel kernel;
        if (req.has_param("kernel")) kernel.kind = parse_kernel(req.get_param_value("kernel"));
        if (auto h = query_double(req, "mount_height")) kernel.mount_height_m = *h;
        const double cell = query_double(req, "cell").value_or(1.0);
        const auto report = footprint_report(snap->scenario, req.get_param_value("area"), kernel, cell);
        json body = footprint_report_to_json(report);
        body["revision"] = snap->revision;
        send_json(res, body);
      });
    });

    server_.Post(R"(/scenarios/([^/]+)/optimize)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 422, [&] {
        const auto snap = snapshot(req.matches[1]);
        const json body = parse_body(req);
        OptimizationSpec spec;
        try {
          spec = optimization_spec_from_json(body, snap->scenario);
        } catch (const Error& e) {
          // Unknown areas in the target are a semantic problem, not a missing scenario.
          send_error(res, e.code() == ErrorCode::NotFound ? 422 : status_for(e.code(), 422), e.code(), e.what());
          return;
        }
        validate(spec);
        if (snap->scenario.sources.empty()) throw Error(ErrorCode::NoSources, "scenario has no light sources");
        target_points(snap->scenario, spec.target);
        const std::string job = runner_.submit(snap->scenario, snap->revision, spec);
        res.set_header("Location", "/jobs/" + job);
        send_json(res, {{"job_id", job}, {"state", "queued"}, {"revision", snap->revision}}, 202);
      });
    });

    server_.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 400, [&] {
        const auto job = runner_.get(req.matches[1]);
        if (!job) throw Error(ErrorCode::NotFound, "no job '" + std::string(req.matches[1]) + "'");
        send_json(res, job_to_json(*job));
      });
    });

    // ?threshold=<sqm>[&cell=<m>]
    server_.Get(R"(/scenarios/([^/]+)/hotspots)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 400, [&] {
        const auto snap = snapshot(req.matches[1]);
        const auto threshold = query_double(req, "threshold");
        if (!threshold) throw Error(ErrorCode::InvalidArgument, "threshold is required");
        const double cell = query_double(req, "cell").value_or(snap->scenario.cell_size_m);
        if (!(cell > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell must be positive");
        const auto grid = render_grid(snap->scenario, cell);
        send_json(res, {{"threshold", *threshold},
                        {"cell_size_m", cell},
                        {"revision", snap->revision},
                        {"regions", hotspots_to_json(hotspots(grid, *threshold, snap->scenario.i0_max()))}});
      });
    });
  }

  using TileKey = std::tuple<std::string, std::uint64_t, int, long, long>;

  std::shared_ptr<const std::vector<std::uint8_t>> tile_bytes(const SnapshotPtr& snap, const std::string& id,
                                                               const TileId& tile) {
    const TileKey key{id, snap->revision, tile.z, tile.x, tile.y};
    {
      std::lock_guard<std::mutex> lock(tile_mutex_);
      auto it = tiles_.find(key);
      if (it != tiles_.end()) return it->second;
    }
    auto bytes = std::make_shared<const std::vector<std::uint8_t>>(encode_png(render_tile(snap->scenario, tile)));
    std::lock_guard<std::mutex> lock(tile_mutex_);
    if (tiles_.size() >= kTileCacheEntries) tiles_.clear();
    tiles_.emplace(key, bytes);
    return bytes;
  }

  static constexpr std::size_t kTileCacheEntries = 1024;

  ServiceConfig config_;
  ScenarioStore store_;
  JobRunner runner_;
  httplib::Server server_;
  std::mutex cache_mutex_;
  std::map<std::string, SnapshotPtr> snapshots_;
  std::map<std::string, std::unique_ptr<std::mutex>> write_locks_;
  std::mutex tile_mutex_;
  std::map<TileKey, std::shared_ptr<const std::vector<std::uint8_t>>> tiles_;
};

}  // namespace lightfield::service

#endif  // LIGHTFIELD_SERVICE_HPP
