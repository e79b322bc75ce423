#include "vbmse/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace vbmse {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

bool is_missing(std::string_view cell) {
  if (cell.empty()) return true;
  std::string lower(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower == "nan" || lower == "na" || lower == "null";
}

double parse_cell(std::string_view cell, Index row, Index col, const std::string& asset) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    std::ostringstream msg;
    msg << "unparseable cell '" << std::string(cell) << "' at data row " << row + 1 << ", column "
        << col + 1 << " (asset '" << asset << "')";
    throw ParseError(msg.str());
  }
  return value;
}

bool all_numeric(const std::vector<std::string>& labels) {
  for (const auto& s : labels) {
    double v;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return false;
  }
  return true;
}

void check_dates_ordered(const std::vector<std::string>& dates) {
  std::set<std::string_view> seen;
  for (const auto& d : dates) {
    if (!seen.insert(d).second) throw ParseError("duplicate date label '" + d + "'");
  }
  // Opaque labels carry no calendar semantics, but the usual encodings
  // (ISO dates of uniform width, plain integers) are order-checkable.
  if (all_numeric(dates)) {
    for (std::size_t i = 1; i < dates.size(); ++i) {
      if (std::stod(dates[i]) <= std::stod(dates[i - 1]))
        throw ParseError("dates not strictly increasing at row " + std::to_string(i + 1));
    }
    return;
  }
  const bool uniform_width = std::all_of(dates.begin(), dates.end(), [&](const std::string& d) {
    return d.size() == dates.front().size();
  });
  if (uniform_width) {
    for (std::size_t i = 1; i < dates.size(); ++i) {
      if (dates[i] <= dates[i - 1])
        throw ParseError("dates not strictly increasing at row " + std::to_string(i + 1));
    }
  }
}

}  // namespace

ReturnsMatrix parse_returns_text(std::string_view text, CsvMode mode, IngestReport* report) {
  // Strip a UTF-8 BOM if present.
  if (text.size() >= 3 && text.substr(0, 3) == "\xef\xbb\xbf") text.remove_prefix(3);

  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) lines.push_back(line);
    pos = eol + 1;
  }
  if (lines.empty()) throw InsufficientHistory("insufficient history: input contains no data");

  const auto header = split_line(lines[0]);
  if (header.size() < 2) throw ParseError("header must contain a date column and at least one asset");
  {
    std::string first(header[0]);
    std::transform(first.begin(), first.end(), first.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (first != "date") throw ParseError("first header column must be 'date', got '" + first + "'");
  }

  std::vector<std::string> assets;
  assets.reserve(header.size() - 1);
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j].empty()) throw ParseError("empty asset name in header column " + std::to_string(j + 1));
    assets.emplace_back(header[j]);
  }
  {
    std::set<std::string_view> seen;
    for (const auto& a : assets)
      if (!seen.insert(a).second) throw ParseError("duplicate asset name '" + a + "'");
  }

  const Index p_raw = static_cast<Index>(assets.size());
  const Index t_raw = static_cast<Index>(lines.size()) - 1;
  if (t_raw < 2) throw InsufficientHistory("insufficient history: need at least 2 data rows, got " +
                                           std::to_string(t_raw));

  std::vector<std::string> dates;
  dates.reserve(t_raw);
  Mat raw(p_raw, t_raw);
  constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  for (Index t = 0; t < t_raw; ++t) {
    const auto cells = split_line(lines[t + 1]);
    if (static_cast<Index>(cells.size()) != p_raw + 1) {
      throw ParseError("data row " + std::to_string(t + 1) + " has " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(p_raw + 1));
    }
    if (cells[0].empty()) throw ParseError("empty date label at data row " + std::to_string(t + 1));
    dates.emplace_back(cells[0]);
    for (Index i = 0; i < p_raw; ++i) {
      const auto cell = cells[i + 1];
      raw(i, t) = is_missing(cell) ? kMissing : parse_cell(cell, t, i + 1, assets[i]);
    }
  }
  check_dates_ordered(dates);

  // Drop (never impute) assets with any missing observation.
  std::vector<Index> keep;
  for (Index i = 0; i < p_raw; ++i) {
    if (raw.row(i).hasNaN()) {
      if (report) report->dropped_assets.push_back(assets[static_cast<std::size_t>(i)]);
    } else {
      keep.push_back(i);
    }
  }
  if (static_cast<Index>(keep.size()) < 2) {
    throw ParseError("fewer than 2 assets survive ingestion (" + std::to_string(keep.size()) +
                     " kept, " + std::to_string(p_raw - static_cast<Index>(keep.size())) + " dropped)");
  }

  ReturnsMatrix out;
  out.assets.reserve(keep.size());
  for (Index i : keep) out.assets.push_back(assets[static_cast<std::size_t>(i)]);

  if (mode == CsvMode::Returns) {
    out.dates = std::move(dates);
    out.values.resize(static_cast<Index>(keep.size()), t_raw);
    for (std::size_t k = 0; k < keep.size(); ++k) out.values.row(static_cast<Index>(k)) = raw.row(keep[k]);
    return out;
  }

  // Prices mode: log(P_t / P_{t-1}); the first day is consumed by the ratio.
  if (t_raw < 3)
    throw InsufficientHistory("insufficient history: prices mode needs at least 3 rows to form 2 returns");
  for (std::size_t k = 0; k < keep.size(); ++k) {
    for (Index t = 0; t < t_raw; ++t) {
      if (raw(keep[k], t) <= 0.0) {
        throw ParseError("non-positive price for asset '" + out.assets[k] + "' at data row " +
                         std::to_string(t + 1));
      }
    }
  }
  out.dates.assign(dates.begin() + 1, dates.end());
  out.values.resize(static_cast<Index>(keep.size()), t_raw - 1);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    for (Index t = 1; t < t_raw; ++t) {
      out.values(static_cast<Index>(k), t - 1) = std::log(raw(keep[k], t) / raw(keep[k], t - 1));
    }
  }
  return out;
}

ReturnsMatrix parse_returns_csv(const std::string& path, CsvMode mode, IngestReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_returns_text(buffer.str(), mode, report);
}

std::string returns_to_csv(const ReturnsMatrix& r) {
  std::ostringstream out;
  out.precision(17);
  out << "date";
  for (const auto& a : r.assets) out << ',' << a;
  out << '\n';
  for (Index t = 0; t < r.days(); ++t) {
    out << r.dates[static_cast<std::size_t>(t)];
    for (Index i = 0; i < r.p(); ++i) out << ',' << r.values(i, t);
    out << '\n';
  }
  return out.str();
}

std::vector<WindowSlice> rolling_windows(const ReturnsMatrix& r, Index n, Index h) {
  if (n < 2) throw InvalidArgument("training window must be at least 2 days");
  if (h < 1) throw InvalidArgument("rebalance period must be at least 1 day");
  if (n + 1 > r.days()) {
    throw InsufficientHistory("insufficient history: window of " + std::to_string(n) +
                              " days plus one holding day exceeds the " + std::to_string(r.days()) +
                              " available days");
  }
  std::vector<WindowSlice> slices;
  for (Index t = n; t < r.days(); t += h) {
    slices.push_back(WindowSlice{t, n, std::min(h, r.days() - t)});
  }
  return slices;
}

}  // namespace vbmse
