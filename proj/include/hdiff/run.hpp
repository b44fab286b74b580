#pragma once

#include <string>

#include "hdiff/config.hpp"

namespace hdiff {

// Experiment runners behind the CLI subcommands. Each writes a manifest plus
// CSV/JSON outputs into `out_dir` and records pass/fail per configured check.
RunManifest run_simulate(const ExperimentConfig& cfg, const std::string& out_dir);
RunManifest run_transport(const ExperimentConfig& cfg, const std::string& out_dir);
RunManifest run_family(const ExperimentConfig& cfg, const std::string& out_dir);
RunManifest run_coupling(const ExperimentConfig& cfg, const std::string& out_dir);
RunManifest run_ot_contract(const ExperimentConfig& cfg, const std::string& out_dir);
RunManifest run_selftest(const ExperimentConfig& cfg, const std::string& out_dir);

// Dispatch by subcommand name; returns the manifest (manifest.passed decides
// the process exit status).
RunManifest run_subcommand(const std::string& name, const ExperimentConfig& cfg,
                           const std::string& out_dir);

// Noise stream allocation: Monte Carlo paths use stream ids 0..n_paths-1;
// auxiliary draws (point clouds) use ids starting at this base.
inline constexpr std::uint64_t kAuxStreamBase = 1ull << 48;

}  // namespace hdiff
