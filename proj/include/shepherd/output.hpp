#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shepherd/controller.hpp"
#include "shepherd/experiment.hpp"

namespace shepherd {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Per-step CSV

inline std::string trace_csv_header(std::size_t sheep) {
  std::string h = "step,shepherd_x,shepherd_y";
  for (std::size_t i = 0; i < sheep; ++i) h += ",x" + std::to_string(i) + ",y" + std::to_string(i);
  h += ",target_neighbors,max_component,pinning,fallback\n";
  return h;
}

inline std::string trace_csv(const TrialResult& r, std::size_t sheep) {
  std::string out = trace_csv_header(sheep);
  for (const StepRecord& rec : r.trace) {
    out += std::to_string(rec.step);
    out += ',' + fmt17(rec.shepherd.x) + ',' + fmt17(rec.shepherd.y);
    for (const Vec2& p : rec.positions) out += ',' + fmt17(p.x) + ',' + fmt17(p.y);
    out += ',' + std::to_string(rec.target_neighbors) + ',' + std::to_string(rec.max_component) + ',' +
           std::to_string(rec.pinning) + ',' + (rec.fallback ? "1" : "0") + '\n';
  }
  return out;
}

struct TraceTable {
  std::size_t sheep{0};
  std::vector<StepRecord> rows;
};

inline TraceTable parse_trace_csv(std::istream& in) {
  TraceTable t;
  std::string line;
  if (!std::getline(in, line)) throw OutputError("trace CSV is empty");
  const auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
  };
  const auto header = split(line);
  if (header.size() < 7 || (header.size() - 7) % 2 != 0 || header[0] != "step") {
    throw OutputError("unrecognised trace CSV header");
  }
  t.sheep = (header.size() - 7) / 2;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw OutputError("trace CSV line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(header.size()));
    }
    try {
      StepRecord r;
      r.step = std::stoull(cells[0]);
      r.shepherd = {std::stod(cells[1]), std::stod(cells[2])};
      for (std::size_t i = 0; i < t.sheep; ++i) {
        r.positions.push_back({std::stod(cells[3 + 2 * i]), std::stod(cells[4 + 2 * i])});
      }
      const std::size_t tail = 3 + 2 * t.sheep;
      r.target_neighbors = std::stoull(cells[tail]);
      r.max_component = std::stoull(cells[tail + 1]);
      r.pinning = std::stoll(cells[tail + 2]);
      r.fallback = cells[tail + 3] == "1";
      t.rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw OutputError("trace CSV line " + std::to_string(lineno) + " is malformed");
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// JSON summary

inline nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json trials = nlohmann::json::array();
  for (const TrialRecord& t : s.trials) {
    nlohmann::json j = {{"index", t.index}, {"seed", t.seed}};
    if (t.result) {
      const TrialResult& r = *t.result;
      j["success"] = r.success;
      j["steps"] = r.steps;
      j["initial_connectivity"] = r.initial_connectivity;
      j["mean_connectivity"] = r.mean_connectivity();
      j["final_connectivity"] = r.final_connectivity();
      j["pinning_selections"] = r.pinning_selections;
      j["fallback_events"] = r.fallback_events;
    } else {
      j["success"] = false;
      j["error"] = t.error;
    }
    trials.push_back(std::move(j));
  }
  nlohmann::json agg = {{"success_rate", s.success_rate},
                        {"mean_time_avg_connectivity", s.mean_time_avg_connectivity},
                        {"min_time_avg_connectivity", s.min_time_avg_connectivity},
                        {"mean_final_connectivity", s.mean_final_connectivity},
                        {"min_final_connectivity", s.min_final_connectivity},
                        {"mean_separation_time", nullptr},
                        {"errors", s.errors}};
  if (s.mean_separation_time) agg["mean_separation_time"] = *s.mean_separation_time;

  std::vector<std::uint64_t> seeds;
  for (const TrialRecord& t : s.trials) seeds.push_back(t.seed);
  return {{"generator", std::string(kRngName)},
          {"config", to_json(s.config)},
          {"target_id", s.target},
          {"sheep", s.sheep},
          {"seeds", seeds},
          {"aggregates", agg},
          {"trials", trials}};
}

// ---------------------------------------------------------------------------
// SVG

namespace detail {

struct Frame {
  double x0, y0, x1, y1;  // data bounds
  double w{640}, h{480}, pad{48};

  double sx(double x) const { return pad + (x - x0) / (x1 - x0) * (w - 2 * pad); }
  double sy(double y) const { return h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad); }
};

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

inline std::string svg_open(double w, double h) {
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\">\n<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
                w, h, w, h);
  return buf;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

// Mean max-component fraction per step across trials; a trial that ended
// early keeps contributing its last value.
inline std::vector<double> mean_connectivity_curve(const RunSummary& s) {
  std::size_t len = 0;
  for (const TrialRecord& t : s.trials) {
    if (t.result) len = std::max(len, t.result->connectivity_series.size());
  }
  std::vector<double> curve(len + 1, 0.0);
  std::size_t n = 0;
  for (const TrialRecord& t : s.trials) {
    if (!t.result) continue;
    ++n;
    const auto& series = t.result->connectivity_series;
    curve[0] += t.result->initial_connectivity;
    for (std::size_t k = 1; k <= len; ++k) {
      curve[k] += series.empty() ? t.result->initial_connectivity : series[std::min(k, series.size()) - 1];
    }
  }
  if (n) {
    for (double& v : curve) v /= static_cast<double>(n);
  }
  return curve;
}

inline std::string summary_label(const RunSummary& s) {
  return s.config.target + " " + std::string(to_string(s.config.method));
}

// One polyline per summary (per target/method pair).
inline std::string connectivity_svg(const std::vector<const RunSummary*>& runs) {
  std::vector<std::vector<double>> curves;
  std::size_t len = 1;
  for (const RunSummary* r : runs) {
    curves.push_back(mean_connectivity_curve(*r));
    len = std::max(len, curves.back().size());
  }
  detail::Frame f{0.0, 0.0, static_cast<double>(std::max<std::size_t>(len - 1, 1)), 1.0};
  std::string svg = detail::svg_open(f.w, f.h);
  svg += "<g stroke=\"black\" fill=\"none\"><line x1=\"" + detail::num(f.sx(0)) + "\" y1=\"" + detail::num(f.sy(0)) +
         "\" x2=\"" + detail::num(f.sx(f.x1)) + "\" y2=\"" + detail::num(f.sy(0)) + "\"/><line x1=\"" +
         detail::num(f.sx(0)) + "\" y1=\"" + detail::num(f.sy(0)) + "\" x2=\"" + detail::num(f.sx(0)) +
         "\" y2=\"" + detail::num(f.sy(1)) + "\"/></g>\n";
  svg += "<text x=\"" + detail::num(f.w / 2) + "\" y=\"" + detail::num(f.h - 12) +
         "\" text-anchor=\"middle\" font-size=\"12\">step</text>\n";
  svg += "<text x=\"12\" y=\"" + detail::num(f.pad - 16) + "\" font-size=\"12\">max-component fraction</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    std::string pts;
    for (std::size_t k = 0; k < curves[i].size(); ++k) {
      pts += detail::num(f.sx(static_cast<double>(k))) + "," + detail::num(f.sy(curves[i][k])) + " ";
    }
    svg += "<polyline class=\"curve\" data-label=\"" + summary_label(*runs[i]) + "\" fill=\"none\" stroke=\"" +
           detail::palette(i) + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    svg += "<text x=\"" + detail::num(f.w - f.pad - 120) + "\" y=\"" + detail::num(f.pad + 16.0 * i) +
           "\" font-size=\"12\" fill=\"" + detail::palette(i) + "\">" + summary_label(*runs[i]) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

// Sheep trails (grey), start (hollow) and end (filled) positions, the target
// in red, and the shepherd path in blue.
inline std::string trajectory_svg(const std::vector<Vec2>& initial, const Vec2& shepherd0,
                                  const std::vector<StepRecord>& rows, std::int64_t target) {
  double x0 = shepherd0.x, x1 = shepherd0.x, y0 = shepherd0.y, y1 = shepherd0.y;
  const auto grow = [&](const Vec2& p) {
    x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
  };
  for (const Vec2& p : initial) grow(p);
  for (const StepRecord& r : rows) {
    grow(r.shepherd);
    for (const Vec2& p : r.positions) grow(p);
  }
  const double span = std::max({x1 - x0, y1 - y0, 1e-6}) * 1.05;
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  detail::Frame f{cx - span / 2, cy - span / 2, cx + span / 2, cy + span / 2, 600, 600, 24};

  std::string svg = detail::svg_open(f.w, f.h);
  const std::size_t n = initial.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::string pts = detail::num(f.sx(initial[i].x)) + "," + detail::num(f.sy(initial[i].y)) + " ";
    for (const StepRecord& r : rows) pts += detail::num(f.sx(r.positions[i].x)) + "," + detail::num(f.sy(r.positions[i].y)) + " ";
    svg += "<polyline class=\"sheep-trail\" fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"1\" points=\"" + pts + "\"/>\n";
  }
  std::string ypts = detail::num(f.sx(shepherd0.x)) + "," + detail::num(f.sy(shepherd0.y)) + " ";
  for (const StepRecord& r : rows) ypts += detail::num(f.sx(r.shepherd.x)) + "," + detail::num(f.sy(r.shepherd.y)) + " ";
  svg += "<polyline class=\"shepherd\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"" + ypts + "\"/>\n";

  const std::vector<Vec2>& last = rows.empty() ? initial : rows.back().positions;
  for (std::size_t i = 0; i < n; ++i) {
    const char* color = static_cast<std::int64_t>(i) == target ? "#d62728" : "#333333";
    svg += "<circle cx=\"" + detail::num(f.sx(initial[i].x)) + "\" cy=\"" + detail::num(f.sy(initial[i].y)) +
           "\" r=\"4\" fill=\"none\" stroke=\"" + color + "\"/>\n";
    svg += "<circle class=\"sheep\" cx=\"" + detail::num(f.sx(last[i].x)) + "\" cy=\"" + detail::num(f.sy(last[i].y)) +
           "\" r=\"4\" fill=\"" + color + "\"/>\n";
  }
  const Vec2 y_end = rows.empty() ? shepherd0 : rows.back().shepherd;
  svg += "<rect x=\"" + detail::num(f.sx(y_end.x) - 5) + "\" y=\"" + detail::num(f.sy(y_end.y) - 5) +
         "\" width=\"10\" height=\"10\" fill=\"#1f77b4\"/>\n";
  svg += "</svg>\n";
  return svg;
}

// Trajectory from a logged CSV alone. The first logged row stands in for the
// initial state; the CSV does not record the target, so none is highlighted.
inline std::string replay_svg(const TraceTable& t) {
  if (t.rows.empty()) throw OutputError("trace CSV has no steps to render");
  return trajectory_svg(t.rows.front().positions, t.rows.front().shepherd, t.rows, -1);
}

// ---------------------------------------------------------------------------

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw OutputError("cannot open '" + p.string() + "' for writing");
  out << text;
  if (!out) throw OutputError("write failed for '" + p.string() + "'");
}

// Writes trial_<i>.csv per traced trial, summary.json, connectivity.svg and
// trajectory_<i>.svg for each snapshot trial. Returns the files written.
inline std::vector<std::filesystem::path> write_outputs(const RunSummary& s, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create '" + dir.string() + "': " + ec.message());

  std::vector<std::filesystem::path> manifest;
  for (const TrialRecord& t : s.trials) {
    if (!t.result || !s.config.record_traces) continue;
    const auto p = dir / ("trial_" + std::to_string(t.index) + ".csv");
    write_text(p, trace_csv(*t.result, s.sheep));
    manifest.push_back(p);
  }

  const auto js = dir / "summary.json";
  write_text(js, summary_to_json(s).dump(2) + "\n");
  manifest.push_back(js);

  const auto cs = dir / "connectivity.svg";
  write_text(cs, connectivity_svg({&s}));
  manifest.push_back(cs);

  for (std::uint64_t idx : s.config.snapshot_trials) {
    if (idx >= s.trials.size() || !s.trials[idx].result) continue;
    const TrialResult& r = *s.trials[idx].result;
    const auto p = dir / ("trajectory_" + std::to_string(idx) + ".svg");
    write_text(p, trajectory_svg(s.initial.positions, s.initial.shepherd, r.trace, static_cast<std::int64_t>(s.target)));
    manifest.push_back(p);
  }
  return manifest;
}

}  // namespace shepherd
