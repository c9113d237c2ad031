#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sppf/confidence.hpp"
#include "sppf/filters.hpp"
#include "sppf/gof.hpp"
#include "sppf/model.hpp"
#include "sppf/strf.hpp"

namespace sppf {

inline constexpr const char* kCsvSchema = "sppf-csv-1";

// --- spike/stimulus text formats -------------------------------------------
// Spike train: `# delta=<seconds>` header, then one 0/1 per line.
// Stimulus: optional `# pad=<n>` header, then one real per line; the first
// `pad` values are pre-history samples.
SpikeTrain read_spike_train(const std::filesystem::path& path);
void write_spike_train(const SpikeTrain& spikes,
                       const std::filesystem::path& path);
StimulusSequence read_stimulus(const std::filesystem::path& path);
void write_stimulus(const StimulusSequence& stim,
                    const std::filesystem::path& path);

// --- spectrogram text format ------------------------------------------------
// Header lines `# bands=<J> bins=<T> delta=<s> f_lo=<Hz> f_hi=<Hz> scale=log`,
// then J rows of T comma-separated reals.
Spectrogram read_spectrogram(const std::filesystem::path& path);
void write_spectrogram(const Spectrogram& spec,
                       const std::filesystem::path& path);

// --- filter snapshots --------------------------------------------------------
// Flat little-endian binary: magic "SPPFSNP1", kind byte (0/1), then
// int64 {M, W, R, k}, float64 {beta, gamma, alpha}, then the state:
// w (M doubles) and g (M) for the zeroth-order filter; w, u (M) and B
// (M x M, row-major) for the first-order filter. Restoring reproduces the
// uninterrupted run bit-exactly.
void save_snapshot(const Ppf0Filter& filter,
                   const std::filesystem::path& path);
void save_snapshot(const Ppf1Filter& filter,
                   const std::filesystem::path& path);
Ppf0Filter load_ppf0_snapshot(const std::filesystem::path& path);
Ppf1Filter load_ppf1_snapshot(const std::filesystem::path& path);

// --- CSV ---------------------------------------------------------------------
// Writers emit `# <schema> <name>` followed by a column-header row. Numeric
// formatting is locale-independent and deterministic.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& name,
            const std::vector<std::string>& columns);

  void raw_row(const std::vector<std::string>& cells);

  template <typename... Ts>
  void row(const Ts&... cells) {
    raw_row({format_cell(cells)...});
  }

  static std::string format_cell(double v);
  static std::string format_cell(long v);
  static std::string format_cell(int v);
  static std::string format_cell(const std::string& v);
  static std::string format_cell(const char* v);

 private:
  std::ofstream out_;
  std::size_t n_columns_;
};

void write_confidence_csv(const std::filesystem::path& path,
                          const std::vector<CoordInterval>& rows);
void write_ks_csv(const std::filesystem::path& path, const KsTest& ks);
void write_acf_csv(const std::filesystem::path& path, const AcfTest& acf);

// --- manifest ---------------------------------------------------------------
std::string git_describe();  // "unknown" when not in a git checkout

}  // namespace sppf
