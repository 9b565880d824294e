#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "demandcast/eval.hpp"

namespace demandcast {

/// Kernel | Degree | Scale | Offset | Sigma | Max Order | Error (%) | Accuracy (%) | Time (s);
/// 999 marks a parameter that does not apply.
void write_svr_table(std::ostream& out, std::span<const EvalReport> reports,
                     std::span<const SvrConfig> sweep);

/// Label | Error | Accuracy | Elapsed time.
void write_ann_table(std::ostream& out, std::string_view title, std::span<const EvalReport> reports);

/// SVG / ANG test-set listing followed by the overall winner.
void write_genius_summary(std::ostream& out, const TournamentResult& result);

void write_input_selection_table(std::ostream& out, const InputSelection& selection);

/// label,error_pct,accuracy_pct,training_error,status. Timing is left out so
/// that reruns produce identical files.
void write_report_csv(std::ostream& out, std::span<const EvalReport> reports);

/// label,elapsed_seconds
void write_timings_csv(std::ostream& out, std::span<const EvalReport> reports);

}  // namespace demandcast
