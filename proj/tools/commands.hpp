#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tadlab/config.hpp"

namespace tadlab::cli {

enum ExitCode : int { kOk = 0, kFailed = 1, kInvalid = 2, kTimeout = 3 };

int cmd_solve(const ExperimentConfig& cfg, std::ostream& out);
int cmd_run(const ExperimentConfig& cfg, std::ostream& out);
int cmd_verify(const ExperimentConfig& cfg, std::ostream& out);
int cmd_report(const ExperimentConfig& cfg, std::ostream& out);

std::vector<std::string> study_names();

/// Runs body and maps library errors to exit codes, with the message on
/// standard error.
int guarded(const std::function<int()>& body);

}  // namespace tadlab::cli
