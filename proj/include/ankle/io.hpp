#pragma once

// Trial persistence: one CSV per channel group plus a JSON manifest naming
// them. Numbers are written with 9 significant digits.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ankle/error.hpp"
#include "ankle/lut.hpp"
#include "ankle/trial.hpp"

namespace ankle {

namespace fs = std::filesystem;
using Json = nlohmann::json;

inline constexpr const char* kTrialSchema = "ankle-trial/1";

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

inline Json read_json(const fs::path& path) {
  const auto text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // nlohmann reports a byte offset; turn it into a line number.
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line) + ": malformed JSON");
  }
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
    text_ += '\n';
  }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) text_ += ',';
      text_ += format_number(v);
      first = false;
    }
    text_ += '\n';
  }

  void raw_row(const std::string& line) { text_ += line + '\n'; }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

/// Header plus rows of cells; every row is checked against the header width.
struct CsvTable {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // source line of each row

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error(ErrorKind::Schema, file + ": missing column '" + name + "'");
  }

  double number(std::size_t row, std::size_t col) const {
    return detail::parse_number(rows[row][col], file + ":" + std::to_string(lines[row]));
  }

  std::size_t index(std::size_t row, std::size_t col) const {
    const auto& text = rows[row][col];
    const auto where = file + ":" + std::to_string(lines[row]);
    const double v = detail::parse_number(text, where);
    if (!(v >= 0.0) || v != std::floor(v) || v > 9e15)
      throw Error(ErrorKind::Parse, where + ": not a sample index '" + text + "'");
    return static_cast<std::size_t>(v);
  }
};

inline CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  t.file = path.filename().string();
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = detail::split_csv(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(ErrorKind::Parse, t.file + ":" + std::to_string(n) + ": expected " +
                                        std::to_string(t.header.size()) + " fields, found " +
                                        std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.lines.push_back(n);
  }
  require(!t.header.empty(), ErrorKind::Parse, t.file + ":1: empty file");
  return t;
}

// ---------------------------------------------------------------------------
// Trial channels
// ---------------------------------------------------------------------------

namespace detail {

inline const std::vector<std::string> kMarkerNames{"LASI", "RASI", "LPSI", "RPSI", "LHEEL"};

inline std::vector<std::string> marker_header() {
  std::vector<std::string> h{"frame"};
  for (const auto& m : kMarkerNames)
    for (const char* a : {"_ML", "_AP", "_VT"}) h.push_back(m + a);
  return h;
}

inline const std::vector<std::string> kCopHeader{"frame", "L_ML", "L_AP", "L_FZ", "L_DEFL",
                                                 "R_ML",  "R_AP", "R_FZ", "R_DEFL"};
inline const std::vector<std::string> kProsthesisHeader{
    "frame", "x", "q", "M", "tibia_omega", "gait_percent", "L_s", "q_d", "x_cmd"};

inline Vec3* marker(MarkerFrame& f, std::size_t k) {
  Vec3* all[] = {&f.lasi, &f.rasi, &f.lpsi, &f.rpsi, &f.lheel};
  return all[k];
}

inline void check_frames(const CsvTable& t, std::size_t expected) {
  if (t.rows.size() != expected)
    throw Error(ErrorKind::Schema, t.file + ": " + std::to_string(t.rows.size()) + " rows, manifest says " +
                                       std::to_string(expected));
  const auto c = t.column("frame");
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (t.index(i, c) != i)
      throw Error(ErrorKind::Parse, t.file + ":" + std::to_string(t.lines[i]) + ": frame out of sequence");
}

}  // namespace detail

struct TrialFiles {
  fs::path manifest;
  Json meta;  // the manifest document
};

/// Writes the channel CSVs and manifest.json into `dir`. `extra` is merged
/// into the manifest (config echo, seed, controller mode).
inline fs::path write_trial(const TrialRecording& rec, const fs::path& dir, const Json& extra = Json::object()) {
  rec.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create directory " + dir.string());

  CsvWriter markers(detail::marker_header());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    std::string line = std::to_string(i);
    auto f = rec.markers[i];
    for (std::size_t k = 0; k < detail::kMarkerNames.size(); ++k) {
      const Vec3* m = detail::marker(f, k);
      line += "," + format_number(m->ml) + "," + format_number(m->ap) + "," + format_number(m->vt);
    }
    markers.raw_row(line);
  }

  CsvWriter cop(detail::kCopHeader);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const auto& l = rec.cop_left[i];
    const auto& r = rec.cop_right[i];
    cop.row({static_cast<double>(i), l.ml, l.ap, l.fz, l.deflection, r.ml, r.ap, r.fz, r.deflection});
  }

  CsvWriter pros(detail::kProsthesisHeader);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const auto& p = rec.prosthesis[i];
    const ControlLogRecord c = rec.control.empty() ? ControlLogRecord{} : rec.control[i];
    pros.row({static_cast<double>(i), p.x, p.q, p.M, p.tibia_omega, c.gait_percent, c.L_s, c.q_d, c.x_cmd});
  }

  CsvWriter events({"side", "index"});
  for (auto e : rec.events_left) events.raw_row("L," + std::to_string(e));
  for (auto e : rec.events_right) events.raw_row("R," + std::to_string(e));

  write_text(dir / "markers.csv", markers.text());
  write_text(dir / "cop.csv", cop.text());
  write_text(dir / "prosthesis.csv", pros.text());
  write_text(dir / "events.csv", events.text());

  Json m = extra;
  m["schema"] = kTrialSchema;
  m["rate"] = rec.rate;
  m["samples"] = rec.size();
  m["body_mass"] = rec.body_mass;
  m["excluded_strides"] = rec.excluded_strides;
  m["has_control_log"] = !rec.control.empty();
  m["channels"] = {{"markers", "markers.csv"},
                   {"cop", "cop.csv"},
                   {"prosthesis", "prosthesis.csv"},
                   {"events", "events.csv"}};
  const auto path = dir / "manifest.json";
  write_text(path, m.dump(2) + "\n");
  return path;
}

namespace detail {

template <class T>
T manifest_field(const Json& m, const std::string& key, const std::string& file) {
  if (!m.contains(key)) throw Error(ErrorKind::Schema, file + ": manifest lacks '" + key + "'");
  try {
    return m.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorKind::Schema, file + ": manifest field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Reads a trial back from its manifest; channel paths are relative to the
/// manifest's directory.
inline TrialRecording read_trial(const fs::path& manifest, Json* meta_out = nullptr) {
  const Json m = read_json(manifest);
  const auto file = manifest.filename().string();
  require(m.is_object(), ErrorKind::Schema, file + ": manifest must be a JSON object");
  const auto schema = detail::manifest_field<std::string>(m, "schema", file);
  require(schema == kTrialSchema, ErrorKind::Schema, file + ": unsupported schema '" + schema + "'");
  require(m.contains("channels") && m["channels"].is_object(), ErrorKind::Schema,
          file + ": manifest lacks 'channels'");
  const auto& ch = m["channels"];
  for (const char* name : {"markers", "cop", "prosthesis", "events"})
    require(ch.contains(name) && ch[name].is_string(), ErrorKind::Schema,
            file + ": missing channel '" + std::string(name) + "'");

  TrialRecording rec;
  rec.rate = detail::manifest_field<double>(m, "rate", file);
  require(rec.rate > 0.0, ErrorKind::Schema, file + ": rate must be positive");
  const auto n = detail::manifest_field<std::size_t>(m, "samples", file);
  rec.body_mass = detail::manifest_field<double>(m, "body_mass", file);
  rec.excluded_strides = detail::manifest_field<std::size_t>(m, "excluded_strides", file);
  const bool has_log = m.value("has_control_log", false);
  const ControlMode mode = m.contains("controller") && m["controller"].is_string()
                               ? parse_mode(m["controller"].get<std::string>())
                               : ControlMode::TC;
  const auto dir = manifest.parent_path();
  auto path_of = [&](const char* name) { return dir / ch[name].get<std::string>(); };

  const auto mk = read_csv(path_of("markers"));
  detail::check_frames(mk, n);
  std::vector<std::size_t> mcol;
  for (const auto& name : detail::marker_header())
    if (name != "frame") mcol.push_back(mk.column(name));
  rec.markers.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < detail::kMarkerNames.size(); ++k)
      *detail::marker(rec.markers[i], k) = {mk.number(i, mcol[3 * k]), mk.number(i, mcol[3 * k + 1]),
                                            mk.number(i, mcol[3 * k + 2])};

  const auto cp = read_csv(path_of("cop"));
  detail::check_frames(cp, n);
  std::vector<std::size_t> ccol;
  for (std::size_t k = 1; k < detail::kCopHeader.size(); ++k) ccol.push_back(cp.column(detail::kCopHeader[k]));
  rec.cop_left.resize(n);
  rec.cop_right.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    rec.cop_left[i] = {cp.number(i, ccol[0]), cp.number(i, ccol[1]), cp.number(i, ccol[2]), cp.number(i, ccol[3])};
    rec.cop_right[i] = {cp.number(i, ccol[4]), cp.number(i, ccol[5]), cp.number(i, ccol[6]), cp.number(i, ccol[7])};
  }

  const auto pr = read_csv(path_of("prosthesis"));
  detail::check_frames(pr, n);
  std::vector<std::size_t> pcol;
  for (std::size_t k = 1; k < detail::kProsthesisHeader.size(); ++k)
    pcol.push_back(pr.column(detail::kProsthesisHeader[k]));
  rec.prosthesis.resize(n);
  if (has_log) rec.control.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    rec.prosthesis[i] = {pr.number(i, pcol[0]), pr.number(i, pcol[1]), pr.number(i, pcol[2]), pr.number(i, pcol[3])};
    if (has_log)
      rec.control[i] = {static_cast<double>(i) / rec.rate, mode, rec.prosthesis[i], pr.number(i, pcol[4]),
                        pr.number(i, pcol[5]),           pr.number(i, pcol[6]), pr.number(i, pcol[7])};
  }

  const auto ev = read_csv(path_of("events"));
  const auto side = ev.column("side"), idx = ev.column("index");
  for (std::size_t r = 0; r < ev.rows.size(); ++r) {
    const auto& s = ev.rows[r][side];
    if (s == "L") rec.events_left.push_back(ev.index(r, idx));
    else if (s == "R") rec.events_right.push_back(ev.index(r, idx));
    else throw Error(ErrorKind::Parse, ev.file + ":" + std::to_string(ev.lines[r]) + ": side must be L or R");
  }
  rec.validate();
  if (meta_out) *meta_out = m;
  return rec;
}

}  // namespace ankle
