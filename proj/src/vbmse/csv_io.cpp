#include "vbmse/csv_io.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace vbmse {

namespace {
constexpr const char* kSchemaComment = "# schema_version=1\n";
}

void atomic_write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  static std::atomic<unsigned> counter{0};
  const fs::path target(path);
  const fs::path dir = target.has_parent_path() ? target.parent_path() : fs::path(".");
  const fs::path tmp = dir / (target.filename().string() + ".tmp" + std::to_string(counter++));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("failed to move '" + tmp.string() + "' to '" + path + "': " + ec.message());
  }
}

std::string curve_csv(const Vec& gammas,
                      const std::vector<std::pair<std::string, Vec>>& columns) {
  for (const auto& [name, values] : columns) {
    if (values.size() != gammas.size())
      throw InvalidArgument("curve column '" + name + "' length mismatch");
  }
  std::ostringstream out;
  out.precision(17);
  out << kSchemaComment << "gamma";
  for (const auto& [name, values] : columns) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < gammas.size(); ++i) {
    out << gammas(i);
    for (const auto& [name, values] : columns) out << ',' << values(i);
    out << '\n';
  }
  return out.str();
}

std::string report_csv(const std::vector<BacktestReport>& reports) {
  std::ostringstream out;
  out.precision(17);
  out << kSchemaComment
      << "method,n_window,rebalance,realized_risk_daily,realized_risk_annualized,num_rebalances\n";
  for (const auto& rep : reports) {
    out << rep.method << ',' << rep.n_window << ',' << rep.rebalance << ','
        << rep.realized_risk_daily << ',' << rep.realized_risk_annualized << ','
        << rep.num_rebalances << '\n';
  }
  return out.str();
}

std::string oos_returns_csv(const std::vector<BacktestReport>& reports, const ReturnsMatrix& r) {
  std::ostringstream out;
  out.precision(17);
  out << kSchemaComment << "method,n_window,date,oos_return\n";
  for (const auto& rep : reports) {
    for (std::size_t i = 0; i < rep.oos_returns.size(); ++i) {
      const auto day = static_cast<std::size_t>(rep.n_window) + i;
      out << rep.method << ',' << rep.n_window << ',' << r.dates.at(day) << ','
          << rep.oos_returns[i] << '\n';
    }
  }
  return out.str();
}

std::string weights_csv(const std::vector<BacktestReport>& reports, const ReturnsMatrix& r) {
  std::ostringstream out;
  out.precision(17);
  out << kSchemaComment << "method,n_window,window_index,t_index,asset,weight\n";
  for (const auto& rep : reports) {
    for (std::size_t k = 0; k < rep.window_weights.size(); ++k) {
      const Index t_index = rep.n_window + static_cast<Index>(k) * rep.rebalance;
      const Vec& w = rep.window_weights[k];
      for (Index i = 0; i < w.size(); ++i) {
        out << rep.method << ',' << rep.n_window << ',' << k << ',' << t_index << ','
            << r.assets.at(static_cast<std::size_t>(i)) << ',' << w(i) << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace vbmse
