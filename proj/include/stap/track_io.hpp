#pragma once

// Track files (`time,x,y`) and the preprocessing that turns them into a
// model-scale Path.

#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stap/error.hpp"
#include "stap/geometry.hpp"

namespace stap {

struct RawTrack {
  std::vector<double> time;  // seconds (epoch or ISO-8601 converted)
  std::vector<double> x, y;
  std::vector<bool> missing;
  std::vector<std::size_t> line;  // source line of each row, for messages

  std::size_t size() const { return time.size(); }
  std::size_t observed() const {
    std::size_t n = 0;
    for (bool m : missing) n += m ? 0 : 1;
    return n;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool all_digits(std::string_view s) {
  if (!s.empty() && s.front() == '-') s.remove_prefix(1);
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

}  // namespace detail

/// Seconds since the epoch for an integer epoch value or an ISO-8601
/// timestamp `YYYY-MM-DD[T ]hh:mm[:ss[.fff]][Z|+hh:mm|-hh:mm]`.
inline std::optional<double> parse_time(std::string_view s) {
  s = detail::trim(s);
  if (detail::all_digits(s)) return detail::parse_double(s);
  int Y = 0, M = 0, D = 0, h = 0, m = 0;
  double sec = 0.0;
  std::string rest(s);
  if (rest.size() < 16 || rest[4] != '-' || rest[7] != '-' || (rest[10] != 'T' && rest[10] != ' ') ||
      rest[13] != ':')
    return std::nullopt;
  auto num = [&](std::size_t pos, std::size_t len, int& out) {
    const auto v = std::string_view(rest).substr(pos, len);
    if (!detail::all_digits(v)) return false;
    std::from_chars(v.data(), v.data() + v.size(), out);
    return true;
  };
  if (!num(0, 4, Y) || !num(5, 2, M) || !num(8, 2, D) || !num(11, 2, h) || !num(14, 2, m)) return std::nullopt;
  std::size_t pos = 16;
  if (pos < rest.size() && rest[pos] == ':') {
    std::size_t end = pos + 1;
    while (end < rest.size() && (std::isdigit(static_cast<unsigned char>(rest[end])) || rest[end] == '.')) ++end;
    const auto v = detail::parse_double(std::string_view(rest).substr(pos + 1, end - pos - 1));
    if (!v) return std::nullopt;
    sec = *v;
    pos = end;
  }
  double offset = 0.0;
  if (pos < rest.size()) {
    const auto tz = std::string_view(rest).substr(pos);
    if (tz == "Z") {
    } else if (tz.size() == 6 && (tz[0] == '+' || tz[0] == '-') && tz[3] == ':') {
      int oh = 0, om = 0;
      if (!num(pos + 1, 2, oh) || !num(pos + 4, 2, om)) return std::nullopt;
      offset = (tz[0] == '+' ? 1.0 : -1.0) * (oh * 3600.0 + om * 60.0);
    } else {
      return std::nullopt;
    }
  }
  using namespace std::chrono;
  const year_month_day ymd{year{Y}, month{static_cast<unsigned>(M)}, day{static_cast<unsigned>(D)}};
  if (!ymd.ok() || h > 23 || m > 59 || sec >= 61.0) return std::nullopt;
  const double days = static_cast<double>(sys_days(ymd).time_since_epoch().count());
  return days * 86400.0 + h * 3600.0 + m * 60.0 + sec - offset;
}

/// Parses CSV text with header `time,x,y`. `source` names the input in
/// error messages.
inline RawTrack parse_track(std::istream& in, const std::string& source) {
  RawTrack t;
  std::string line;
  std::size_t ln = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++ln;
    const auto s = detail::trim(line);
    if (s.empty()) continue;
    if (!header) {
      const auto cols = detail::split(s, ',');
      if (cols.size() != 3 || detail::trim(cols[0]) != "time" || detail::trim(cols[1]) != "x" ||
          detail::trim(cols[2]) != "y")
        throw DataError(source + ":" + std::to_string(ln) + ": expected header 'time,x,y'");
      header = true;
      continue;
    }
    const auto cols = detail::split(s, ',');
    const std::string where = source + ":" + std::to_string(ln) + ": ";
    if (cols.size() != 3) throw DataError(where + "expected 3 columns, found " + std::to_string(cols.size()));
    const auto tm = parse_time(cols[0]);
    if (!tm) throw DataError(where + "malformed time '" + std::string(detail::trim(cols[0])) + "'");
    const bool ex = detail::trim(cols[1]).empty(), ey = detail::trim(cols[2]).empty();
    if (ex != ey) throw DataError(where + "x and y must both be present or both empty");
    double x = 0.0, y = 0.0;
    if (!ex) {
      const auto px = detail::parse_double(cols[1]);
      const auto py = detail::parse_double(cols[2]);
      if (!px) throw DataError(where + "malformed x '" + std::string(detail::trim(cols[1])) + "'");
      if (!py) throw DataError(where + "malformed y '" + std::string(detail::trim(cols[2])) + "'");
      x = *px;
      y = *py;
    }
    if (!t.time.empty() && *tm < t.time.back())
      throw DataError(where + "timestamp goes backwards (line " + std::to_string(t.line.back()) + " is later)");
    t.time.push_back(*tm);
    t.x.push_back(x);
    t.y.push_back(y);
    t.missing.push_back(ex);
    t.line.push_back(ln);
  }
  if (!header) throw DataError(source + ": missing header 'time,x,y'");
  if (t.observed() < 3) throw DataError(source + ": need at least 3 rows with coordinates");
  return t;
}

inline RawTrack load_track(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot read " + file);
  return parse_track(in, file);
}

/// A Path in model coordinates plus what is needed to map back.
struct Preprocessed {
  Path path;
  Vec2 center{0.0, 0.0};
  double scale = 1.0;     // pooled standard deviation
  double interval = 0.0;  // nominal time step
  std::size_t leading_trimmed = 0;
  std::size_t trailing_trimmed = 0;
  std::size_t inserted = 0;  // rows added by gap expansion

  Vec2 to_model(Vec2 p) const { return (1.0 / scale) * (p - center); }
  Vec2 to_data(Vec2 p) const { return scale * p + center; }
};

/// Expands gaps that are whole multiples of the nominal interval into
/// missing rows, trims missing rows at both ends, and (optionally) centers
/// by the per-axis mean and divides by the pooled standard deviation, the
/// square root of the mean of the two per-axis sample variances.
inline Preprocessed preprocess(const RawTrack& t, bool center_scale = true) {
  if (t.observed() < 3) throw DataError("need at least 3 observed rows");
  Preprocessed out;
  double dt = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double g = t.time[i] - t.time[i - 1];
    if (g > 0.0 && (dt == 0.0 || g < dt)) dt = g;
  }
  if (dt == 0.0 && t.size() > 1) throw DataError("all timestamps are equal");
  out.interval = dt;

  std::vector<Vec2> pts;
  std::vector<bool> miss;
  std::vector<double> ts;
  std::ostringstream bad;
  int nbad = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0) {
      const double ratio = (t.time[i] - t.time[i - 1]) / dt;
      const double k = std::round(ratio);
      if (k < 1.0 || std::abs(ratio - k) > 1e-6 * std::max(1.0, k)) {
        if (nbad++ < 10)
          bad << (nbad > 1 ? ", " : "") << "lines " << t.line[i - 1] << "-" << t.line[i] << " (" << ratio
              << " intervals)";
        continue;
      }
      for (int j = 1; j < static_cast<int>(k); ++j) {
        pts.push_back({0.0, 0.0});
        miss.push_back(true);
        ts.push_back(t.time[i - 1] + j * dt);
        ++out.inserted;
      }
    }
    pts.push_back({t.x[i], t.y[i]});
    miss.push_back(t.missing[i]);
    ts.push_back(t.time[i]);
  }
  if (nbad > 0)
    throw DataError("irregular time steps not resolvable with interval " + std::to_string(dt) + ": " + bad.str() +
                    (nbad > 10 ? " and " + std::to_string(nbad - 10) + " more" : ""));

  std::size_t first = 0, last = pts.size();
  while (miss[first]) ++first;
  while (miss[last - 1]) --last;
  out.leading_trimmed = first;
  out.trailing_trimmed = pts.size() - last;

  if (center_scale) {
    double n = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t i = first; i < last; ++i)
      if (!miss[i]) {
        n += 1.0;
        mx += pts[i].x;
        my += pts[i].y;
      }
    mx /= n;
    my /= n;
    double vx = 0.0, vy = 0.0;
    for (std::size_t i = first; i < last; ++i)
      if (!miss[i]) {
        vx += (pts[i].x - mx) * (pts[i].x - mx);
        vy += (pts[i].y - my) * (pts[i].y - my);
      }
    vx /= n - 1.0;
    vy /= n - 1.0;
    out.center = {mx, my};
    out.scale = std::sqrt(0.5 * (vx + vy));
    if (!(out.scale > 0.0)) throw DataError("observed coordinates have no spread");
  }

  Path& p = out.path;
  std::vector<double> kept;
  bool any_missing = false;
  for (std::size_t i = first; i < last; ++i) {
    p.points.push_back(miss[i] ? Vec2{0.0, 0.0} : out.to_model(pts[i]));
    p.missing.push_back(miss[i]);
    any_missing = any_missing || miss[i];
    kept.push_back(ts[i]);
  }
  if (!any_missing) p.missing.clear();
  p.timestamps = std::move(kept);
  // Placeholder one unit behind s1; s0 is a model parameter.
  p.s0 = p.points.front() - Vec2{1.0, 0.0};
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Writes `time,x,y` with empty cells for missing points.
inline void write_track_csv(std::ostream& out, const Path& path) {
  out << "time,x,y\n";
  for (std::size_t i = 0; i < path.size(); ++i) {
    out << (path.timestamps ? format_double((*path.timestamps)[i]) : std::to_string(i)) << ',';
    if (!path.is_missing(i)) out << format_double(path.points[i].x) << ',' << format_double(path.points[i].y);
    else out << ',';
    out << '\n';
  }
}

/// Path from a track file taken as is: no scaling, missing rows kept.
/// s0 is placed one unit behind s1 in the -x direction.
inline Path track_to_path(const RawTrack& t) {
  Preprocessed p = preprocess(t, false);
  return std::move(p.path);
}

}  // namespace stap
