#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgm {

// Bad user input: files, configs, incompatible data. CLI maps this to exit 2.
class input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CellRef {
  int i = 0;  // origin year, 1..n
  int j = 0;  // development year, 1..n
  int k = 0;  // business, 1..K
};

// Rectangular panel of K incremental-claim triangles. Indices are 1-based:
// origin year i and development year j run over 1..n, business k over 1..K.
// Each cell is absent, present-but-held-out (lower-triangle truth kept for
// scoring), or observed; inference consumes observed cells only.
class TrianglePanel {
 public:
  TrianglePanel() = default;

  TrianglePanel(int n, int K)
      : n_(n),
        K_(K),
        values_(static_cast<std::size_t>(n) * n * K, 0.0),
        present_(values_.size(), 0),
        observed_(values_.size(), 0) {
    if (n < 1 || K < 1) throw std::invalid_argument("TrianglePanel: n and K must be >= 1");
    origin_labels_.resize(n);
    dev_labels_.resize(n);
    for (int t = 0; t < n; ++t) origin_labels_[t] = dev_labels_[t] = t + 1;
    business_labels_.resize(K);
    for (int k = 0; k < K; ++k) business_labels_[k] = std::to_string(k + 1);
  }

  int n() const { return n_; }
  int K() const { return K_; }

  double value(int i, int j, int k) const { return values_[index(i, j, k)]; }
  bool present(int i, int j, int k) const { return present_[index(i, j, k)] != 0; }
  bool observed(int i, int j, int k) const { return observed_[index(i, j, k)] != 0; }

  void set_cell(int i, int j, int k, double value, bool obs) {
    const std::size_t at = index(i, j, k);
    values_[at] = value;
    present_[at] = 1;
    observed_[at] = obs ? 1 : 0;
  }

  void set_value(int i, int j, int k, double value) { values_[index(i, j, k)] = value; }
  void set_observed(int i, int j, int k, bool obs) { observed_[index(i, j, k)] = obs ? 1 : 0; }

  // Upper-triangle mask: observed exactly where j <= n+1-i.
  bool calibration_state() const {
    for (int k = 1; k <= K_; ++k)
      for (int i = 1; i <= n_; ++i)
        for (int j = 1; j <= n_; ++j)
          if (observed(i, j, k) != (j <= n_ + 1 - i)) return false;
    return true;
  }

  int observed_count(int k) const {
    int c = 0;
    for (int i = 1; i <= n_; ++i)
      for (int j = 1; j <= n_; ++j)
        if (observed(i, j, k)) ++c;
    return c;
  }

  const std::vector<std::string>& business_labels() const { return business_labels_; }
  const std::vector<long>& origin_labels() const { return origin_labels_; }
  const std::vector<long>& dev_labels() const { return dev_labels_; }
  void set_labels(std::vector<std::string> business, std::vector<long> origin,
                  std::vector<long> dev) {
    business_labels_ = std::move(business);
    origin_labels_ = std::move(origin);
    dev_labels_ = std::move(dev);
  }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) - 1) * n_ * n_ +
           (static_cast<std::size_t>(i) - 1) * n_ + (static_cast<std::size_t>(j) - 1);
  }

 private:
  int n_ = 0;
  int K_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> present_;
  std::vector<std::uint8_t> observed_;
  std::vector<std::string> business_labels_;
  std::vector<long> origin_labels_;
  std::vector<long> dev_labels_;
};

// Observed cells in the fixed scan order (k, then i, then j).
inline std::vector<CellRef> observed_cells(const TrianglePanel& panel) {
  std::vector<CellRef> cells;
  for (int k = 1; k <= panel.K(); ++k)
    for (int i = 1; i <= panel.n(); ++i)
      for (int j = 1; j <= panel.n(); ++j)
        if (panel.observed(i, j, k)) cells.push_back({i, j, k});
  return cells;
}

// Unobserved (future) cells, same order but with j ascending so AR windows
// can be filled sequentially.
inline std::vector<CellRef> unobserved_cells(const TrianglePanel& panel) {
  std::vector<CellRef> cells;
  for (int k = 1; k <= panel.K(); ++k)
    for (int i = 1; i <= panel.n(); ++i)
      for (int j = 1; j <= panel.n(); ++j)
        if (!panel.observed(i, j, k)) cells.push_back({i, j, k});
  return cells;
}

// ---------------------------------------------------------------------------
// Value transform
// ---------------------------------------------------------------------------

// Power rescaling x -> (x / divisor)^power applied at ingestion, e.g.
// divisor 1000 and power 0.5 for "divide by a thousand, take the root".
struct TransformSpec {
  double divisor = 1.0;
  double power = 1.0;
  bool enabled = false;

  void validate() const {
    if (!(divisor > 0.0)) throw input_error("transform: divisor must be positive");
    if (!(power > 0.0 && power <= 1.0)) throw input_error("transform: power must be in (0, 1]");
  }
};

inline double transform_value(double x, const TransformSpec& t) {
  if (!t.enabled) return x;
  if (x < 0.0) throw input_error("transform: negative value");
  return std::pow(x / t.divisor, t.power);
}

inline double invert_transform(double value, const TransformSpec& t) {
  if (!t.enabled) return value;
  if (value < 0.0) throw input_error("transform: negative value");
  return std::pow(value, 1.0 / t.power) * t.divisor;
}

// Rescales every present cell; the mask is untouched.
inline TrianglePanel apply_transform(const TrianglePanel& panel, const TransformSpec& t) {
  if (!t.enabled) return panel;
  t.validate();
  TrianglePanel out = panel;
  for (int k = 1; k <= panel.K(); ++k)
    for (int i = 1; i <= panel.n(); ++i)
      for (int j = 1; j <= panel.n(); ++j)
        if (panel.present(i, j, k))
          out.set_value(i, j, k, transform_value(panel.value(i, j, k), t));
  return out;
}

// Lifts exact zeros to a small floor so the gamma likelihood stays proper.
// Returns the number of cells floored (callers warn when nonzero).
inline int floor_zero_cells(TrianglePanel& panel, double eps) {
  if (!(eps > 0.0)) throw input_error("zero floor must be positive");
  int count = 0;
  for (int k = 1; k <= panel.K(); ++k)
    for (int i = 1; i <= panel.n(); ++i)
      for (int j = 1; j <= panel.n(); ++j)
        if (panel.present(i, j, k) && panel.value(i, j, k) == 0.0) {
          panel.set_value(i, j, k, eps);
          ++count;
        }
  return count;
}

// ---------------------------------------------------------------------------
// Model and run configuration
// ---------------------------------------------------------------------------

// Dependence order plus the six hyperprior constants shared by every
// hyperparameter of the same family.
struct ModelSpec {
  int p = 1;
  double a_alpha0 = 1.0, b_alpha0 = 1.0;
  double a_beta0 = 1.0, b_beta0 = 1.0;
  double a_gamma0 = 10.0, b_gamma0 = 10.0;
  TransformSpec transform;
  double zero_floor = 1e-6;

  void validate(int n) const {
    if (p < 0) throw input_error("model: p must be >= 0");
    if (p >= n) throw input_error("model: p must be smaller than the triangle depth n");
    for (double c : {a_alpha0, b_alpha0, a_beta0, b_beta0, a_gamma0, b_gamma0})
      if (!(c > 0.0)) throw input_error("model: hyperprior constants must be positive");
    transform.validate();
  }
};

struct RunConfig {
  int chains = 2;
  long burn_in = 10000;
  long keep = 10000;
  int thin = 1;
  std::uint64_t seed = 1;
  double slice_width = 1.0;  // stepping width on the log scale
  double tail_tol = 1e-12;   // discrete enumeration cutoff
  int threads = 0;           // 0 = hardware concurrency

  void validate() const {
    if (chains < 1) throw input_error("run: chains must be >= 1");
    if (burn_in < 0) throw input_error("run: burn_in must be >= 0");
    if (keep < 1) throw input_error("run: keep must be >= 1");
    if (thin < 1) throw input_error("run: thin must be >= 1");
    if (!(slice_width > 0.0)) throw input_error("run: slice_width must be positive");
    if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw input_error("run: tail_tol must be in (0, 1)");
  }
};

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

// Column names in the long-format input file. Remappable so files with other
// headers (e.g. GRCODE / AccidentYear / DevelopmentLag) load unchanged.
struct CsvSchema {
  std::string business = "business_id";
  std::string origin = "origin_year";
  std::string dev = "dev_year";
  std::string value = "value";
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline long parse_long(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw input_error("");
    return v;
  } catch (...) {
    throw input_error("unparseable " + what + ": '" + s + "'");
  }
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw input_error("");
    return v;
  } catch (...) {
    throw input_error("unparseable " + what + ": '" + s + "'");
  }
}

// Labels must re-index to 1..n with no gaps.
inline void check_contiguous(const std::vector<long>& sorted, const std::string& what) {
  for (std::size_t t = 1; t < sorted.size(); ++t)
    if (sorted[t] != sorted[t - 1] + 1)
      throw input_error(what + " are not contiguous (gap after " +
                        std::to_string(sorted[t - 1]) + ")");
}

}  // namespace detail

// Parses a long-format panel: header row, one cell per line. Upper-triangle
// cells become observed; lower-triangle rows, when supplied, are stored as
// held-out truth. Every upper-triangle cell must be present.
inline TrianglePanel parse_panel(std::istream& in, const CsvSchema& schema = {}) {
  std::string line;
  if (!std::getline(in, line)) throw input_error("empty input file");
  const auto header = detail::split_csv_line(line);
  auto col_of = [&](const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return static_cast<long>(c);
    throw input_error("missing column '" + name + "' in header");
  };
  const long c_bus = col_of(schema.business);
  const long c_org = col_of(schema.origin);
  const long c_dev = col_of(schema.dev);
  const long c_val = col_of(schema.value);

  struct RawRow {
    std::string business;
    long origin, dev;
    double value;
  };
  std::vector<RawRow> rows;
  std::vector<std::string> businesses;  // first-appearance order
  std::set<long> origin_set, dev_set;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const long needed = std::max({c_bus, c_org, c_dev, c_val});
    if (static_cast<long>(fields.size()) <= needed)
      throw input_error("line " + std::to_string(line_no) + ": too few columns");
    RawRow r;
    r.business = fields[c_bus];
    r.origin = detail::parse_long(fields[c_org], "origin year");
    r.dev = detail::parse_long(fields[c_dev], "development year");
    r.value = detail::parse_double(fields[c_val], "value");
    if (!std::isfinite(r.value))
      throw input_error("line " + std::to_string(line_no) + ": non-finite value");
    if (r.value < 0.0)
      throw input_error("line " + std::to_string(line_no) + ": negative value");
    if (std::find(businesses.begin(), businesses.end(), r.business) == businesses.end())
      businesses.push_back(r.business);
    origin_set.insert(r.origin);
    dev_set.insert(r.dev);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw input_error("no data rows");

  std::vector<long> origins(origin_set.begin(), origin_set.end());
  std::vector<long> devs(dev_set.begin(), dev_set.end());
  detail::check_contiguous(origins, "origin years");
  detail::check_contiguous(devs, "development years");
  if (origins.size() != devs.size())
    throw input_error("panel is not square: " + std::to_string(origins.size()) +
                      " origin years vs " + std::to_string(devs.size()) +
                      " development years");
  const int n = static_cast<int>(origins.size());
  const int K = static_cast<int>(businesses.size());

  // Ragged detection before cell placement so the error names the business.
  std::map<std::string, std::set<long>> per_business_origins;
  for (const auto& r : rows) per_business_origins[r.business].insert(r.origin);
  for (const auto& [b, s] : per_business_origins)
    if (static_cast<int>(s.size()) != n)
      throw input_error("ragged businesses: '" + b + "' covers " +
                        std::to_string(s.size()) + " origin years, expected " +
                        std::to_string(n));

  TrianglePanel panel(n, K);
  panel.set_labels(businesses, origins, devs);
  auto origin_index = [&](long y) {
    return static_cast<int>(std::lower_bound(origins.begin(), origins.end(), y) -
                            origins.begin()) + 1;
  };
  auto dev_index = [&](long y) {
    return static_cast<int>(std::lower_bound(devs.begin(), devs.end(), y) - devs.begin()) + 1;
  };
  auto business_index = [&](const std::string& b) {
    return static_cast<int>(std::find(businesses.begin(), businesses.end(), b) -
                            businesses.begin()) + 1;
  };

  for (const auto& r : rows) {
    const int i = origin_index(r.origin);
    const int j = dev_index(r.dev);
    const int k = business_index(r.business);
    if (panel.present(i, j, k))
      throw input_error("duplicate cell (business=" + r.business +
                        ", origin=" + std::to_string(r.origin) +
                        ", dev=" + std::to_string(r.dev) + ")");
    panel.set_cell(i, j, k, r.value, j <= n + 1 - i);
  }

  for (int k = 1; k <= K; ++k)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n + 1 - i; ++j)
        if (!panel.present(i, j, k))
          throw input_error("missing upper-triangle cell (business=" +
                            businesses[k - 1] + ", origin=" +
                            std::to_string(origins[i - 1]) + ", dev=" +
                            std::to_string(devs[j - 1]) + ")");
  return panel;
}

inline TrianglePanel load_panel(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");
  return parse_panel(in, schema);
}

inline void write_panel_csv(const TrianglePanel& panel, std::ostream& out,
                            bool observed_only) {
  out << "business_id,origin_year,dev_year,value\n";
  char buf[64];
  for (int k = 1; k <= panel.K(); ++k)
    for (int i = 1; i <= panel.n(); ++i)
      for (int j = 1; j <= panel.n(); ++j) {
        if (!panel.present(i, j, k)) continue;
        if (observed_only && !panel.observed(i, j, k)) continue;
        std::snprintf(buf, sizeof(buf), "%.17g", panel.value(i, j, k));
        out << panel.business_labels()[k - 1] << ',' << panel.origin_labels()[i - 1]
            << ',' << panel.dev_labels()[j - 1] << ',' << buf << '\n';
      }
}

inline void save_panel_csv(const TrianglePanel& panel, const std::string& path,
                           bool observed_only) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");
  write_panel_csv(panel, out, observed_only);
}

}  // namespace dgm
