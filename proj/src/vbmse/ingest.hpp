#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vbmse/common.hpp"

namespace vbmse {

// p assets by T trading days of logarithmic returns. Dates are opaque ordered
// labels; no calendar arithmetic is ever applied to them.
struct ReturnsMatrix {
  std::vector<std::string> assets;  // length p
  std::vector<std::string> dates;   // length T
  Mat values;                       // p x T

  Index p() const { return values.rows(); }
  Index days() const { return values.cols(); }
};

enum class CsvMode { Prices, Returns };

// Assets removed during ingestion (any missing cell drops the whole asset;
// imputation would silently distort the covariance structure).
struct IngestReport {
  std::vector<std::string> dropped_assets;
};

// Parses a UTF-8 comma-separated file with header `date,<asset>,...` and one
// row per trading day. In Prices mode values are converted to log returns
// log(P_t / P_{t-1}) and the day count shrinks by one.
//
// Throws ParseError with the row/column location for malformed cells,
// InsufficientHistory when fewer than 2 days survive, and ParseError when
// fewer than 2 assets survive.
ReturnsMatrix parse_returns_csv(const std::string& path, CsvMode mode,
                                IngestReport* report = nullptr);

// Same contract, operating on in-memory text.
ReturnsMatrix parse_returns_text(std::string_view text, CsvMode mode,
                                 IngestReport* report = nullptr);

std::string returns_to_csv(const ReturnsMatrix& r);

// One rolling step: train on columns [t_index - n, t_index), hold weights over
// columns [t_index, t_index + hold_len).
struct WindowSlice {
  Index t_index;
  Index train_len;
  Index hold_len;

  auto train(const ReturnsMatrix& r) const {
    return r.values.middleCols(t_index - train_len, train_len);
  }
  auto hold(const ReturnsMatrix& r) const { return r.values.middleCols(t_index, hold_len); }
};

// Rolling windows shifted by h days. The trailing partial holding block is
// kept: its returns still count toward realized risk. Requires n >= 2,
// h >= 1 and at least one out-of-sample day (n + 1 <= T).
std::vector<WindowSlice> rolling_windows(const ReturnsMatrix& r, Index n, Index h);

}  // namespace vbmse
