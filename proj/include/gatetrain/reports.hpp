#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gatetrain/experiments.hpp"

// CSV and SVG output for the experiment drivers. Column order is fixed; see
// docs/csv_schemas.md.
namespace gatetrain::reports {

using Echo = std::vector<std::pair<std::string, std::string>>;

/// Data-side config columns shared by every run row.
Echo data_echo(const experiments::DataOptions& data);

std::string join_sizes(const std::vector<std::size_t>& sizes);

/// One summary row per run, prefixed by the constant `echo` columns.
void write_runs(const std::filesystem::path& path, const std::vector<const experiments::RunOutcome*>& runs,
                const Echo& echo);
/// One row per snapshot of every run, keyed by run_id.
void write_snapshots(const std::filesystem::path& path,
                     const std::vector<const experiments::RunOutcome*>& runs);
/// id, ever_mistaken, update_count for every training sample.
void write_samples(const std::filesystem::path& path, const experiments::RunOutcome& run);

void write_train(const std::filesystem::path& dir, const experiments::RunOutcome& run,
                 const experiments::DataOptions& data);
void write_sweep(const std::filesystem::path& dir, const experiments::SweepResult& result,
                 const experiments::DataOptions& data);
void write_scaling(const std::filesystem::path& dir, const experiments::ScalingResult& result,
                   const experiments::DataOptions& data);
void write_blur(const std::filesystem::path& dir, const experiments::BlurResult& result,
                const experiments::DataOptions& data);
void write_incremental(const std::filesystem::path& dir,
                       const experiments::IncrementalExperiment& exp,
                       const experiments::DataOptions& data);
void write_viz2d(const std::filesystem::path& dir, const experiments::Viz2dResult& result);
void write_gradcheck(const std::filesystem::path& dir, const experiments::GradcheckReport& report);

}  // namespace gatetrain::reports
