#include "fedgan/trajectory_log.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <stdexcept>

#include "fedgan/csv.hpp"

namespace fedgan {

std::uint64_t param_checksum(std::span<const double> values) {
  std::uint64_t h = 14695981039346656037ull;
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

TrajectoryLog::TrajectoryLog(std::size_t agents, std::size_t dim_d, std::size_t dim_g,
                             std::size_t K, std::size_t stride)
    : agents_(agents), dim_d_(dim_d), dim_g_(dim_g), K_(K), stride_(stride) {
  if (K == 0) throw std::invalid_argument("TrajectoryLog: K must be >= 1");
  if (stride == 0) throw std::invalid_argument("TrajectoryLog: stride must be >= 1");
}

void TrajectoryLog::add(const ParamVector& d, const ParamVector& g, LogRow meta) {
  if (d.size() != dim_d_ || g.size() != dim_g_) {
    throw ShapeError("TrajectoryLog::add: parameter sizes do not match the log");
  }
  if (!rows_.empty() && meta.cum_scalars < rows_.back().cum_scalars) {
    throw std::logic_error("TrajectoryLog::add: cumulative scalars decreased");
  }
  if (meta.synced() && meta.step % K_ != 0) {
    throw std::logic_error("TrajectoryLog::add: synced row at a step that is not a multiple of K");
  }
  std::vector<double> all;
  all.reserve(dim_d_ + dim_g_);
  all.insert(all.end(), d.data().begin(), d.data().end());
  all.insert(all.end(), g.data().begin(), g.data().end());
  meta.param_norm = l2_norm(all);
  meta.checksum = param_checksum(all);
  if (meta.synced()) final_synced_params = all;
  if (param_level()) meta.params = std::move(all);
  rows_.push_back(std::move(meta));
}

std::vector<const LogRow*> TrajectoryLog::synced_rows() const {
  std::vector<const LogRow*> out;
  for (const LogRow& r : rows_) {
    if (r.synced()) out.push_back(&r);
  }
  return out;
}

std::vector<const LogRow*> TrajectoryLog::agent_rows(long agent) const {
  std::vector<const LogRow*> out;
  for (const LogRow& r : rows_) {
    if (r.agent == agent) out.push_back(&r);
  }
  return out;
}

const LogRow& TrajectoryLog::last_synced() const {
  for (auto it = rows_.rbegin(); it != rows_.rend(); ++it) {
    if (it->synced()) return *it;
  }
  throw std::logic_error("TrajectoryLog: no synced row recorded");
}

std::pair<ParamVector, ParamVector> TrajectoryLog::split(const LogRow& row, LayoutPtr layout_d,
                                                         LayoutPtr layout_g) const {
  if (row.params.size() != dim_d_ + dim_g_) {
    throw std::invalid_argument("TrajectoryLog::split: row holds no parameter values");
  }
  if (layout_d->total() != dim_d_ || layout_g->total() != dim_g_) {
    throw ShapeError("TrajectoryLog::split: layouts do not match the log");
  }
  const auto mid = row.params.begin() + static_cast<std::ptrdiff_t>(dim_d_);
  return {ParamVector(std::move(layout_d), std::vector<double>(row.params.begin(), mid)),
          ParamVector(std::move(layout_g), std::vector<double>(mid, row.params.end()))};
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <typename T>
T parse_unsigned(std::string_view s, int base, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument(std::string("trajectory csv: bad ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

void TrajectoryLog::write_csv(const std::filesystem::path& path) const {
  CsvWriter w(path);
  std::vector<std::string> header = {"step", "agent_id", "rate_a", "rate_b"};
  if (param_level()) {
    for (std::size_t i = 0; i < dim_d_ + dim_g_; ++i) header.push_back("param_" + std::to_string(i));
  } else {
    header.push_back("param_norm");
    header.push_back("checksum");
  }
  for (const char* c : {"loss_d", "loss_g", "grad_norm_d", "grad_norm_g", "cum_scalars"}) header.push_back(c);
  w.row(header);
  for (const LogRow& r : rows_) {
    std::vector<std::string> cells = {std::to_string(r.step),
                                      r.synced() ? "synced" : std::to_string(r.agent),
                                      format_double(r.rate_a), format_double(r.rate_b)};
    if (param_level()) {
      for (double v : r.params) cells.push_back(format_double(v));
    } else {
      cells.push_back(format_double(r.param_norm));
      cells.push_back(hex64(r.checksum));
    }
    cells.push_back(format_double(r.loss_d));
    cells.push_back(format_double(r.loss_g));
    cells.push_back(format_double(r.grad_norm_d));
    cells.push_back(format_double(r.grad_norm_g));
    cells.push_back(std::to_string(r.cum_scalars));
    w.row(cells);
  }
}

TrajectoryLog TrajectoryLog::read_csv(const std::filesystem::path& path, std::size_t agents,
                                      std::size_t dim_d, std::size_t dim_g, std::size_t K,
                                      std::size_t stride) {
  const CsvTable t = fedgan::read_csv(path);
  TrajectoryLog log(agents, dim_d, dim_g, K, stride);
  const std::size_t c_step = t.column("step"), c_agent = t.column("agent_id");
  const std::size_t c_ra = t.column("rate_a"), c_rb = t.column("rate_b");
  const std::size_t c_ld = t.column("loss_d"), c_lg = t.column("loss_g");
  const std::size_t c_gd = t.column("grad_norm_d"), c_gg = t.column("grad_norm_g");
  const std::size_t c_cum = t.column("cum_scalars");
  const bool level = log.param_level();
  std::size_t c_p0 = 0, c_norm = 0, c_sum = 0;
  if (level) {
    c_p0 = t.column("param_0");
    if (dim_d + dim_g > 0 && !t.find("param_" + std::to_string(dim_d + dim_g - 1))) {
      throw std::invalid_argument(path.string() + ": fewer param columns than the model has");
    }
  } else {
    c_norm = t.column("param_norm");
    c_sum = t.column("checksum");
  }
  for (const auto& cells : t.rows) {
    LogRow r;
    r.step = parse_unsigned<std::size_t>(cells[c_step], 10, "step");
    r.agent = cells[c_agent] == "synced" ? kSyncedAgent
                                         : static_cast<long>(parse_unsigned<std::size_t>(cells[c_agent], 10, "agent_id"));
    r.rate_a = parse_double(cells[c_ra]);
    r.rate_b = parse_double(cells[c_rb]);
    if (level) {
      r.params.reserve(dim_d + dim_g);
      for (std::size_t i = 0; i < dim_d + dim_g; ++i) r.params.push_back(parse_double(cells[c_p0 + i]));
      r.param_norm = l2_norm(r.params);
      r.checksum = param_checksum(r.params);
    } else {
      r.param_norm = parse_double(cells[c_norm]);
      r.checksum = parse_unsigned<std::uint64_t>(cells[c_sum], 16, "checksum");
    }
    r.loss_d = parse_double(cells[c_ld]);
    r.loss_g = parse_double(cells[c_lg]);
    r.grad_norm_d = parse_double(cells[c_gd]);
    r.grad_norm_g = parse_double(cells[c_gg]);
    r.cum_scalars = parse_unsigned<std::uint64_t>(cells[c_cum], 10, "cum_scalars");
    log.final_step = std::max(log.final_step, r.step);
    if (r.synced() && level) log.final_synced_params = r.params;
    log.rows_.push_back(std::move(r));
  }
  return log;
}

}  // namespace fedgan
