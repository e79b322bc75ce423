#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vbmse/backtest.hpp"
#include "vbmse/common.hpp"
#include "vbmse/ingest.hpp"

namespace vbmse {

// Writes via a temporary file in the same directory followed by a rename, so
// readers never observe a half-written result.
void atomic_write_text(const std::string& path, const std::string& content);

// gamma,<one column per named series>; leading `# schema_version=1` comment.
std::string curve_csv(const Vec& gammas,
                      const std::vector<std::pair<std::string, Vec>>& columns);

std::string report_csv(const std::vector<BacktestReport>& reports);

// Per-day out-of-sample returns: method,n_window,date,oos_return.
std::string oos_returns_csv(const std::vector<BacktestReport>& reports, const ReturnsMatrix& r);

// Per-window weights: method,n_window,window_index,t_index,asset,weight.
std::string weights_csv(const std::vector<BacktestReport>& reports, const ReturnsMatrix& r);

}  // namespace vbmse
