#include "demandcast/report.hpp"

#include <cstdio>
#include <ostream>
#include <string>

namespace demandcast {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string full(double v) { return fmt("%.17g", v); }

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

template <typename T>
std::string param(const std::optional<T>& v) {
  if (!v) return "999";
  return fmt("%g", static_cast<double>(*v));
}

std::string family_title(KernelFamily f) {
  switch (f) {
    case KernelFamily::anova: return "Anova";
    case KernelFamily::bspline: return "BSpline";
    case KernelFamily::erbf: return "ERBF";
    case KernelFamily::linear: return "Linear";
    case KernelFamily::poly: return "Poly";
    case KernelFamily::rbf: return "RBF";
    case KernelFamily::spline: return "Spline";
  }
  return "?";
}

}  // namespace

void write_svr_table(std::ostream& out, std::span<const EvalReport> reports,
                     std::span<const SvrConfig> sweep) {
  out << pad("Kernel", 9) << pad("Degree", 8) << pad("Scale", 7) << pad("Offset", 8)
      << pad("Sigma", 7) << pad("MaxOrder", 10) << pad("Error(%)", 11) << pad("Accuracy(%)", 13)
      << "Time(s)\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const Kernel& k = sweep[i].kernel;
    out << pad(family_title(k.family), 9) << pad(param(k.degree), 8) << pad(param(k.scale), 7)
        << pad(param(k.offset), 8) << pad(param(k.sigma), 7) << pad(param(k.max_order), 10);
    if (reports[i].failure) {
      out << "FAILED: " << *reports[i].failure << '\n';
      continue;
    }
    out << pad(fmt("%.5f", reports[i].error_pct), 11) << pad(fmt("%.1f", reports[i].accuracy_pct), 13)
        << fmt("%.3f", reports[i].elapsed_seconds) << '\n';
  }
}

void write_ann_table(std::ostream& out, std::string_view title, std::span<const EvalReport> reports) {
  out << pad(std::string(title), 7) << pad("Error", 11) << pad("Accuracy", 10) << "Elapsed time\n";
  for (const auto& r : reports) {
    out << pad(r.model_label, 7);
    if (r.failure) {
      out << "FAILED: " << *r.failure << '\n';
      continue;
    }
    out << pad(fmt("%.4f%%", r.error_pct), 11) << pad(fmt("%.1f%%", r.accuracy_pct), 10)
        << fmt("%.3fs", r.elapsed_seconds) << '\n';
  }
}

void write_genius_summary(std::ostream& out, const TournamentResult& t) {
  out << "SVG (" << t.svg_test.model_label << ") Error     " << fmt("%.5f%%", t.svg_test.error_pct)
      << '\n'
      << "SVG (" << t.svg_test.model_label << ") Accuracy  "
      << fmt("%.1f%%", t.svg_test.accuracy_pct) << '\n'
      << "ANG (" << t.ang_test.model_label << ") Error     " << fmt("%.5f%%", t.ang_test.error_pct)
      << '\n'
      << "ANG (" << t.ang_test.model_label << ") Accuracy  "
      << fmt("%.1f%%", t.ang_test.accuracy_pct) << '\n'
      << "Overall Genius: " << (t.og == Genius::svg ? "SVG " + t.svg_test.model_label
                                                     : "ANG " + t.ang_test.model_label)
      << '\n';
}

void write_input_selection_table(std::ostream& out, const InputSelection& selection) {
  out << pad("Inputs", 8) << "Training Error\n";
  for (const auto& row : selection.table) {
    out << pad(std::to_string(row.inputs), 8);
    if (row.failure) {
      out << "FAILED: " << *row.failure << '\n';
    } else {
      out << fmt("%.6f", row.training_error) << '\n';
    }
  }
  out << "Adopted: " << selection.chosen << " inputs\n";
}

void write_report_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "label,error_pct,accuracy_pct,training_error,status\n";
  for (const auto& r : reports) {
    out << r.model_label << ',';
    if (r.failure) {
      out << ",,,failed\n";
      continue;
    }
    out << full(r.error_pct) << ',' << full(r.accuracy_pct) << ',' << full(r.training_error)
        << ",ok\n";
  }
}

void write_timings_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "label,elapsed_seconds\n";
  for (const auto& r : reports) out << r.model_label << ',' << fmt("%.6f", r.elapsed_seconds) << '\n';
}

}  // namespace demandcast
