#include "demandcast/model_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace demandcast {

namespace {

constexpr std::string_view kMagic = "demandcast-model 1";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_block(std::ostream& out, std::string_view name, const Matrix& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << num(row[c]);
    out << '\n';
  }
}

Matrix column_of(const std::vector<double>& v) { return Matrix::column(v); }

struct Parsed {
  std::map<std::string, std::string, std::less<>> scalars;
  std::map<std::string, Matrix, std::less<>> blocks;

  const std::string& scalar(std::string_view key) const {
    const auto it = scalars.find(key);
    if (it == scalars.end()) throw FormatError("model file lacks '" + std::string(key) + "'");
    return it->second;
  }
  bool has(std::string_view key) const { return scalars.find(key) != scalars.end(); }
  double real(std::string_view key) const {
    const std::string& text = scalar(key);
    double v{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size()) {
      throw FormatError("model file: '" + std::string(key) + "' is not a number");
    }
    return v;
  }
  std::uint64_t count(std::string_view key) const {
    const std::string& text = scalar(key);
    std::uint64_t v{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size()) {
      throw FormatError("model file: '" + std::string(key) + "' is not a count");
    }
    return v;
  }
  const Matrix& block(std::string_view key) const {
    const auto it = blocks.find(key);
    if (it == blocks.end()) throw FormatError("model file lacks block '" + std::string(key) + "'");
    return it->second;
  }
};

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

Parsed parse(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    ++line_no;
    return static_cast<bool>(std::getline(in, line));
  };
  if (!next() || line != kMagic) throw FormatError("not a demandcast model file", 1);

  Parsed p;
  while (true) {
    if (!next()) throw FormatError("model file truncated (missing 'end')", line_no);
    const auto t = tokens(line);
    if (t.empty()) continue;
    if (t.size() == 1 && t[0] == "end") break;
    if (t.size() == 2) {
      p.scalars[t[0]] = t[1];
      continue;
    }
    if (t.size() != 3) throw FormatError("unrecognised model line", line_no);
    std::size_t rows = 0, cols = 0;
    try {
      rows = std::stoul(t[1]);
      cols = std::stoul(t[2]);
    } catch (const std::exception&) {
      throw FormatError("bad block dimensions", line_no);
    }
    std::vector<double> values;
    values.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!next()) throw FormatError("model file truncated inside block " + t[0], line_no);
      const auto row = tokens(line);
      if (row.size() != cols) throw FormatError("block " + t[0] + " row has wrong width", line_no);
      for (const auto& cell : row) {
        double v{};
        const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc{} || end != cell.data() + cell.size()) {
          throw FormatError("bad number '" + cell + "'", line_no);
        }
        values.push_back(v);
      }
    }
    p.blocks.emplace(t[0], Matrix(rows, cols, std::move(values)));
  }
  return p;
}

}  // namespace

void write_model(std::ostream& out, const TrainedModel& model) {
  out << kMagic << '\n';
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MlpModel>) {
          out << "family mlp\n"
              << "n_inputs " << m.config.n_inputs << '\n'
              << "n_hidden " << m.config.n_hidden << '\n'
              << "output_activation " << to_string(m.config.output_activation) << '\n'
              << "optimizer " << to_string(m.config.optimizer) << '\n'
              << "max_iters " << m.config.max_iters << '\n'
              << "grad_tol " << num(m.config.grad_tol) << '\n'
              << "seed " << m.config.seed << '\n'
              << "iterations " << m.iterations << '\n'
              << "training_error " << num(m.training_error) << '\n';
          write_block(out, "w1", m.w1);
          write_block(out, "w2", m.w2);
        } else if constexpr (std::is_same_v<T, RbfModel>) {
          out << "family rbf\n"
              << "n_inputs " << m.config.n_inputs << '\n'
              << "n_hidden " << m.config.n_hidden << '\n'
              << "activation " << to_string(m.config.activation) << '\n'
              << "em_iters " << m.config.em_iters << '\n'
              << "seed " << m.config.seed << '\n'
              << "training_error " << num(m.training_error) << '\n';
          write_block(out, "centres", m.centres);
          write_block(out, "widths", column_of(m.widths));
          write_block(out, "weights", m.weights);
        } else {
          const Kernel& k = m.config.kernel;
          out << "family svr\n"
              << "kernel " << to_string(k.family) << '\n';
          if (k.degree) out << "degree " << *k.degree << '\n';
          if (k.scale) out << "scale " << num(*k.scale) << '\n';
          if (k.offset) out << "offset " << num(*k.offset) << '\n';
          if (k.sigma) out << "sigma " << num(*k.sigma) << '\n';
          if (k.max_order) out << "max_order " << *k.max_order << '\n';
          out << "c " << num(m.config.c) << '\n'
              << "epsilon " << num(m.config.epsilon) << '\n'
              << "kkt_tol " << num(m.config.kkt_tol) << '\n'
              << "max_passes " << m.config.max_passes << '\n'
              << "seed " << m.config.seed << '\n'
              << "converged " << (m.converged ? 1 : 0) << '\n'
              << "kkt_violation " << num(m.kkt_violation) << '\n'
              << "iterations " << m.iterations << '\n'
              << "b " << num(m.b) << '\n'
              << "training_error " << num(m.training_error) << '\n';
          write_block(out, "support_vectors", m.support_vectors);
          write_block(out, "coefficients", column_of(m.dual_coefficients));
        }
      },
      model);
  out << "end\n";
}

TrainedModel read_model(std::istream& in) {
  const Parsed p = parse(in);
  const std::string& family = p.scalar("family");
  try {
    if (family == "mlp") {
      MlpModel m;
      m.config.n_inputs = p.count("n_inputs");
      m.config.n_hidden = p.count("n_hidden");
      m.config.output_activation = parse_output_activation(p.scalar("output_activation"));
      m.config.optimizer = parse_mlp_optimizer(p.scalar("optimizer"));
      m.config.max_iters = p.count("max_iters");
      m.config.grad_tol = p.real("grad_tol");
      m.config.seed = p.count("seed");
      m.iterations = p.count("iterations");
      m.training_error = p.real("training_error");
      m.w1 = p.block("w1");
      m.w2 = p.block("w2");
      m.config.validate();
      if (m.w1.rows() != m.config.n_inputs + 1 || m.w1.cols() != m.config.n_hidden ||
          m.w2.rows() != m.config.n_hidden + 1) {
        throw FormatError("mlp weight blocks do not match the configured shape");
      }
      return m;
    }
    if (family == "rbf") {
      RbfModel m;
      m.config.n_inputs = p.count("n_inputs");
      m.config.n_hidden = p.count("n_hidden");
      m.config.activation = parse_rbf_activation(p.scalar("activation"));
      m.config.em_iters = p.count("em_iters");
      m.config.seed = p.count("seed");
      m.training_error = p.real("training_error");
      m.centres = p.block("centres");
      const Matrix& widths = p.block("widths");
      m.widths.assign(widths.entries().begin(), widths.entries().end());
      m.weights = p.block("weights");
      m.config.validate();
      if (m.centres.rows() != m.config.n_hidden || m.centres.cols() != m.config.n_inputs ||
          m.widths.size() != m.config.n_hidden || m.weights.rows() != m.config.n_hidden + 1) {
        throw FormatError("rbf blocks do not match the configured shape");
      }
      return m;
    }
    if (family == "svr") {
      SvrModel m;
      Kernel& k = m.config.kernel;
      k.family = parse_kernel_family(p.scalar("kernel"));
      if (p.has("degree")) k.degree = static_cast<int>(p.count("degree"));
      if (p.has("scale")) k.scale = p.real("scale");
      if (p.has("offset")) k.offset = p.real("offset");
      if (p.has("sigma")) k.sigma = p.real("sigma");
      if (p.has("max_order")) k.max_order = static_cast<int>(p.count("max_order"));
      m.config.c = p.real("c");
      m.config.epsilon = p.real("epsilon");
      m.config.kkt_tol = p.real("kkt_tol");
      m.config.max_passes = p.count("max_passes");
      m.config.seed = p.count("seed");
      m.converged = p.count("converged") != 0;
      m.kkt_violation = p.real("kkt_violation");
      m.iterations = p.count("iterations");
      m.b = p.real("b");
      m.training_error = p.real("training_error");
      m.support_vectors = p.block("support_vectors");
      const Matrix& coef = p.block("coefficients");
      m.dual_coefficients.assign(coef.entries().begin(), coef.entries().end());
      m.config.validate();
      if (m.dual_coefficients.size() != m.support_vectors.rows()) {
        throw FormatError("svr coefficient count does not match support vectors");
      }
      return m;
    }
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid model: ") + e.what());
  }
  throw FormatError("unknown model family '" + family + "'");
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_model(out, model);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_model(in);
}

std::string summarize_model(const TrainedModel& model) {
  std::ostringstream out;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MlpModel>) {
          out << "mlp, " << to_string(m.config.output_activation) << " output, "
              << m.config.n_hidden << " hidden, " << to_string(m.config.optimizer) << '\n'
              << "inputs: " << m.config.n_inputs << '\n'
              << "parameters: " << m.parameter_count() << '\n'
              << "training error (sum of squares): " << num(m.training_error) << '\n';
        } else if constexpr (std::is_same_v<T, RbfModel>) {
          out << "rbf, " << to_string(m.config.activation) << " basis, " << m.n_hidden()
              << " centres\n"
              << "inputs: " << m.n_inputs() << '\n'
              << "parameters: " << m.centres.size() + m.widths.size() + m.weights.size() << '\n'
              << "training error (MAPE %): " << num(m.training_error) << '\n';
        } else {
          out << "svr, kernel " << m.config.kernel.label() << ", C " << num(m.config.c)
              << ", epsilon " << num(m.config.epsilon) << '\n'
              << "support vectors: " << m.support_vector_count() << '\n'
              << "inputs: " << m.support_vectors.cols() << '\n'
              << "threshold b: " << num(m.b) << '\n'
              << "training error (MAPE %): " << num(m.training_error) << '\n';
        }
      },
      model);
  return out.str();
}

}  // namespace demandcast
