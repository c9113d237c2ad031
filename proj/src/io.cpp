#include "sppf/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "sppf/errors.hpp"

namespace sppf {

namespace {

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw config_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path,
                       bool binary = false) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw config_error("cannot write " + path.string());
  return out;
}

// `# key=value [key=value...]` headers
bool parse_header(const std::string& line, const std::string& key,
                  std::string& value) {
  if (line.empty() || line[0] != '#') return false;
  const std::string needle = key + "=";
  const auto pos = line.find(needle);
  if (pos == std::string::npos) return false;
  const auto start = pos + needle.size();
  auto end = line.find_first_of(" \t", start);
  if (end == std::string::npos) end = line.size();
  value = line.substr(start, end - start);
  return true;
}

}  // namespace

SpikeTrain read_spike_train(const std::filesystem::path& path) {
  auto in = open_in(path);
  SpikeTrain out;
  bool have_delta = false;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string v;
      if (parse_header(line, "delta", v)) {
        out.delta = std::stod(v);
        have_delta = true;
      }
      continue;
    }
    if (line == "0") {
      out.bins.push_back(0);
    } else if (line == "1") {
      out.bins.push_back(1);
    } else {
      throw config_error(path.string() + ":" + std::to_string(lineno) +
                         ": spike entries must be 0 or 1");
    }
  }
  if (!have_delta)
    throw config_error(path.string() + ": missing `# delta=<seconds>` header");
  out.validate();
  return out;
}

void write_spike_train(const SpikeTrain& spikes,
                       const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "# delta=" << CsvWriter::format_cell(spikes.delta) << "\n";
  for (auto b : spikes.bins) out << (b ? "1\n" : "0\n");
}

StimulusSequence read_stimulus(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<double> values;
  int pad = 0;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string v;
      if (parse_header(line, "pad", v)) pad = std::stoi(v);
      continue;
    }
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw config_error(path.string() + ":" + std::to_string(lineno) +
                         ": not a number");
    }
  }
  if (static_cast<long>(values.size()) < pad)
    throw config_error(path.string() + ": fewer samples than pad");
  return StimulusSequence(std::move(values), pad);
}

void write_stimulus(const StimulusSequence& stim,
                    const std::filesystem::path& path) {
  auto out = open_out(path);
  if (stim.pad() > 0) out << "# pad=" << stim.pad() << "\n";
  for (double v : stim.raw()) out << CsvWriter::format_cell(v) << "\n";
}

Spectrogram read_spectrogram(const std::filesystem::path& path) {
  auto in = open_in(path);
  Spectrogram out;
  long bands = -1, bins = -1;
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string v;
      if (parse_header(line, "bands", v)) bands = std::stol(v);
      if (parse_header(line, "bins", v)) bins = std::stol(v);
      if (parse_header(line, "delta", v)) out.delta = std::stod(v);
      if (parse_header(line, "f_lo", v)) out.f_lo = std::stod(v);
      if (parse_header(line, "f_hi", v)) out.f_hi = std::stod(v);
      continue;
    }
    rows.emplace_back();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) rows.back().push_back(std::stod(cell));
  }
  if (bands < 1 || bins < 1)
    throw config_error(path.string() + ": missing bands/bins header");
  if (static_cast<long>(rows.size()) != bands)
    throw config_error(path.string() + ": row count != bands");
  out.power.resize(bands, bins);
  for (long b = 0; b < bands; ++b) {
    if (static_cast<long>(rows[b].size()) != bins)
      throw config_error(path.string() + ": column count != bins");
    for (long t = 0; t < bins; ++t) out.power(b, t) = rows[b][t];
  }
  return out;
}

void write_spectrogram(const Spectrogram& spec,
                       const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "# bands=" << spec.bands() << " bins=" << spec.bins()
      << " delta=" << CsvWriter::format_cell(spec.delta)
      << " f_lo=" << CsvWriter::format_cell(spec.f_lo)
      << " f_hi=" << CsvWriter::format_cell(spec.f_hi) << " scale=log\n";
  for (int b = 0; b < spec.bands(); ++b) {
    for (long t = 0; t < spec.bins(); ++t) {
      if (t) out << ',';
      out << CsvWriter::format_cell(spec.power(b, t));
    }
    out << '\n';
  }
}

namespace {

constexpr char kSnapshotMagic[8] = {'S', 'P', 'P', 'F', 'S', 'N', 'P', '1'};

void put_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
void get_bytes(std::ifstream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw config_error("truncated snapshot");
}
void put_i64(std::ofstream& out, std::int64_t v) { put_bytes(out, &v, 8); }
void put_f64(std::ofstream& out, double v) { put_bytes(out, &v, 8); }
std::int64_t get_i64(std::ifstream& in) {
  std::int64_t v;
  get_bytes(in, &v, 8);
  return v;
}
double get_f64(std::ifstream& in) {
  double v;
  get_bytes(in, &v, 8);
  return v;
}

void write_snapshot_header(std::ofstream& out, std::uint8_t kind, long dim,
                           long w, const FilterHyper& hyper, long k) {
  put_bytes(out, kSnapshotMagic, 8);
  put_bytes(out, &kind, 1);
  put_i64(out, dim);
  put_i64(out, w);
  put_i64(out, hyper.prox.iterations);
  put_i64(out, k);
  put_f64(out, hyper.beta);
  put_f64(out, hyper.prox.gamma);
  put_f64(out, hyper.prox.step_size);
}

struct SnapshotHeader {
  std::uint8_t kind;
  long dim, w, r, k;
  double beta, gamma, alpha;
};

SnapshotHeader read_snapshot_header(std::ifstream& in) {
  char magic[8];
  get_bytes(in, magic, 8);
  if (std::memcmp(magic, kSnapshotMagic, 8) != 0)
    throw config_error("not a filter snapshot");
  SnapshotHeader h{};
  get_bytes(in, &h.kind, 1);
  h.dim = get_i64(in);
  h.w = get_i64(in);
  h.r = get_i64(in);
  h.k = get_i64(in);
  h.beta = get_f64(in);
  h.gamma = get_f64(in);
  h.alpha = get_f64(in);
  return h;
}

void put_vector(std::ofstream& out, const Eigen::VectorXd& v) {
  put_bytes(out, v.data(), sizeof(double) * v.size());
}
Eigen::VectorXd get_vector(std::ifstream& in, long n) {
  Eigen::VectorXd v(n);
  get_bytes(in, v.data(), sizeof(double) * n);
  return v;
}

}  // namespace

void save_snapshot(const Ppf0Filter& filter,
                   const std::filesystem::path& path) {
  auto out = open_out(path, true);
  write_snapshot_header(out, 0, filter.estimate().size(),
                        filter.last_window_size(), filter.hyper(),
                        filter.window());
  put_vector(out, filter.estimate().w);
  put_vector(out, filter.gradient_state());
}

void save_snapshot(const Ppf1Filter& filter,
                   const std::filesystem::path& path) {
  auto out = open_out(path, true);
  write_snapshot_header(out, 1, filter.estimate().size(),
                        filter.last_window_size(), filter.hyper(),
                        filter.window());
  put_vector(out, filter.estimate().w);
  put_vector(out, filter.linear_state());
  // row-major for a documented layout; Eigen default is column-major
  const auto& B = filter.hessian();
  for (long i = 0; i < B.rows(); ++i)
    for (long j = 0; j < B.cols(); ++j) put_f64(out, B(i, j));
}

Ppf0Filter load_ppf0_snapshot(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  const SnapshotHeader h = read_snapshot_header(in);
  if (h.kind != 0) throw config_error("snapshot is not a zeroth-order filter");
  FilterHyper hyper;
  hyper.beta = h.beta;
  hyper.prox.gamma = h.gamma;
  hyper.prox.step_size = h.alpha;
  hyper.prox.iterations = static_cast<int>(h.r);
  Ppf0Filter filter(static_cast<int>(h.dim), hyper);
  ParamVector w(get_vector(in, h.dim));
  Eigen::VectorXd g = get_vector(in, h.dim);
  filter.restore(std::move(g), std::move(w), h.k, static_cast<int>(h.w));
  return filter;
}

Ppf1Filter load_ppf1_snapshot(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  const SnapshotHeader h = read_snapshot_header(in);
  if (h.kind != 1) throw config_error("snapshot is not a first-order filter");
  FilterHyper hyper;
  hyper.beta = h.beta;
  hyper.prox.gamma = h.gamma;
  hyper.prox.step_size = h.alpha;
  hyper.prox.iterations = static_cast<int>(h.r);
  Ppf1Filter filter(static_cast<int>(h.dim), hyper);
  ParamVector w(get_vector(in, h.dim));
  Eigen::VectorXd u = get_vector(in, h.dim);
  Eigen::MatrixXd B(h.dim, h.dim);
  for (long i = 0; i < h.dim; ++i)
    for (long j = 0; j < h.dim; ++j) B(i, j) = get_f64(in);
  filter.restore(std::move(u), std::move(B), std::move(w), h.k,
                 static_cast<int>(h.w));
  return filter;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& name,
                     const std::vector<std::string>& columns)
    : out_(open_out(path)), n_columns_(columns.size()) {
  out_ << "# " << kCsvSchema << ' ' << name << '\n';
  raw_row(columns);
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
  if (cells.size() != n_columns_)
    throw std::invalid_argument("csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

std::string CsvWriter::format_cell(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}
std::string CsvWriter::format_cell(long v) { return std::to_string(v); }
std::string CsvWriter::format_cell(int v) { return std::to_string(v); }
std::string CsvWriter::format_cell(const std::string& v) { return v; }
std::string CsvWriter::format_cell(const char* v) { return v; }

void write_confidence_csv(const std::filesystem::path& path,
                          const std::vector<CoordInterval>& rows) {
  CsvWriter csv(path, "confidence",
                {"window", "coord", "w_hat", "w_desparsified", "sigma_hat",
                 "lo", "hi", "level"});
  for (const auto& r : rows) {
    csv.row(r.window, r.coord, r.estimate, r.debiased, r.sigma, r.lo, r.hi,
            r.level);
  }
}

void write_ks_csv(const std::filesystem::path& path, const KsTest& ks) {
  CsvWriter csv(path, "ks",
                {"model_quantile", "empirical_quantile", "band_lo", "band_hi",
                 "statistic", "pass"});
  for (const auto& q : ks.quantiles) {
    csv.row(q[0], q[1], q[0] - ks.band, q[0] + ks.band, ks.statistic,
            ks.pass ? 1L : 0L);
  }
}

void write_acf_csv(const std::filesystem::path& path, const AcfTest& acf) {
  CsvWriter csv(path, "acf", {"lag", "value", "band_lo", "band_hi", "pass"});
  for (std::size_t l = 0; l < acf.acf.size(); ++l) {
    csv.row(static_cast<long>(l + 1), acf.acf[l], -acf.band, acf.band,
            acf.pass ? 1L : 0L);
  }
}

std::string git_describe() {
  FILE* pipe = popen("git describe --always --dirty 2>/dev/null", "r");
  if (!pipe) return "unknown";
  char buf[128];
  std::string out;
  while (fgets(buf, sizeof(buf), pipe)) out += buf;
  pclose(pipe);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r'))
    out.pop_back();
  return out.empty() ? "unknown" : out;
}

}  // namespace sppf
