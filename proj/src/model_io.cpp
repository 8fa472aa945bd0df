// SPDX-License-Identifier: Apache-2.0
#include "rnngen/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "rnngen/errors.hpp"

namespace rnngen {

namespace {

using nlohmann::json;

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix(std::ostringstream& os, std::string_view name, const Matrix& m) {
  os << ",\n  \"" << name << "\": {\"rows\": " << m.rows() << ", \"cols\": " << m.cols()
     << ", \"data\": [";
  for (std::size_t i = 0; i < m.data().size(); ++i) os << (i ? ", " : "") << num(m.data()[i]);
  os << "]}";
}

void write_activation(std::ostringstream& os, const Activation& a) {
  os << "{\"kind\": \"" << to_string(a.kind) << "\", \"rho\": " << num(a.rho)
     << ", \"b\": " << num(a.b) << "}";
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw MissingField("missing field '" + path + "'", path);
  }
  return obj.at(key);
}

double number(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ParseError("field '" + path + "' is not a number", path);
}

std::size_t count(const json& obj, const std::string& key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError("field '" + path + "' must be a non-negative integer", path);
  }
  return v.get<std::size_t>();
}

json parse(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), "", e.byte);
  }
}

void check_version(const json& doc) {
  const json& v = field(doc, "format_version", "format_version");
  if (!v.is_number_integer() || v.get<int>() != kFormatVersion) {
    throw VersionMismatch("unsupported format_version " + v.dump() + " (expected 1)",
                          "format_version");
  }
}

Matrix read_matrix(const json& doc, std::string_view name, std::size_t rows, std::size_t cols) {
  const std::string key(name);
  const json& block = field(doc, key, key);
  const std::size_t r = count(block, "rows", key + ".rows");
  const std::size_t c = count(block, "cols", key + ".cols");
  if (r != rows || c != cols) {
    throw DimensionMismatch("matrix '" + key + "' is " + std::to_string(r) + "x" +
                                std::to_string(c) + ", expected " + std::to_string(rows) + "x" +
                                std::to_string(cols),
                            key);
  }
  const json& data = field(block, "data", key + ".data");
  if (!data.is_array() || data.size() != rows * cols) {
    throw DimensionMismatch("matrix '" + key + "' data must hold " + std::to_string(rows * cols) +
                                " entries",
                            key + ".data");
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < data.size(); ++i) m.data()[i] = number(data[i], key + ".data");
  return m;
}

Activation read_activation(const json& acts, const std::string& slot) {
  const std::string path = "activations." + slot;
  const json& a = field(acts, slot, path);
  const json& kind = field(a, "kind", path + ".kind");
  if (!kind.is_string()) throw ParseError("field '" + path + ".kind' must be a string", path + ".kind");
  Activation out;
  try {
    out = Activation::of(activation_kind_from_string(kind.get<std::string>()));
  } catch (const InvalidInput& e) {
    throw ParseError(e.what(), path + ".kind");
  }
  if (a.contains("rho")) out.rho = number(a.at("rho"), path + ".rho");
  if (a.contains("b")) out.b = number(a.at("b"), path + ".b");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw InvalidInput("write to '" + path + "' failed");
}

}  // namespace

std::string model_to_json(const Model& model) {
  const Dims dims = validate(model.weights);
  std::ostringstream os;
  os << "{\n  \"format_version\": " << kFormatVersion << ",\n  \"cell_type\": \""
     << to_string(model.cell()) << "\",\n  \"dims\": ";
  if (const auto* conv = std::get_if<ConvWeights>(&model.weights)) {
    os << "{\"d\": " << conv->d << ", \"k\": " << conv->k() << ", \"K\": " << conv->K << "}";
  } else {
    os << "{\"d_x\": " << dims.d_x << ", \"d_h\": " << dims.d_h << ", \"d_y\": " << dims.d_y << "}";
  }
  os << ",\n  \"activations\": {\"sigma_h\": ";
  write_activation(os, model.sigma_h);
  os << ", \"sigma_y\": ";
  write_activation(os, model.sigma_y);
  os << "}";
  for (const NamedMatrix& nm : named_matrices(model.weights)) write_matrix(os, nm.name, *nm.matrix);
  os << "\n}\n";
  return os.str();
}

Model model_from_json(std::string_view text) {
  const json doc = parse(text);
  if (!doc.is_object()) throw ParseError("model file must be a JSON object", "");
  check_version(doc);
  const json& ct = field(doc, "cell_type", "cell_type");
  if (!ct.is_string()) throw ParseError("field 'cell_type' must be a string", "cell_type");
  CellType cell;
  try {
    cell = cell_type_from_string(ct.get<std::string>());
  } catch (const InvalidInput&) {
    throw UnsupportedCell("unsupported cell_type '" + ct.get<std::string>() + "'", "cell_type");
  }
  const json& dims = field(doc, "dims", "dims");
  const json& acts = field(doc, "activations", "activations");

  Model model;
  model.sigma_h = read_activation(acts, "sigma_h");
  model.sigma_y = read_activation(acts, "sigma_y");

  if (cell == CellType::conv) {
    ConvWeights w;
    w.d = count(dims, "d", "dims.d");
    const std::size_t k = count(dims, "k", "dims.k");
    w.K = count(dims, "K", "dims.K");
    w.U_cal = read_matrix(doc, "U_cal", k, k);
    w.V_cal = read_matrix(doc, "V_cal", k, k);
    w.W_cal = read_matrix(doc, "W_cal", k, k);
    model.weights = std::move(w);
  } else {
    const std::size_t dx = count(dims, "d_x", "dims.d_x");
    const std::size_t dh = count(dims, "d_h", "dims.d_h");
    const std::size_t dy = count(dims, "d_y", "dims.d_y");
    if (cell == CellType::vanilla) {
      model.weights = VanillaWeights{read_matrix(doc, "U", dh, dh), read_matrix(doc, "V", dy, dh),
                                     read_matrix(doc, "W", dh, dx)};
    } else if (cell == CellType::mgu) {
      MguWeights w;
      w.W_r = read_matrix(doc, "W_r", dh, dx);
      w.W_h = read_matrix(doc, "W_h", dh, dx);
      w.U_r = read_matrix(doc, "U_r", dh, dh);
      w.U_h = read_matrix(doc, "U_h", dh, dh);
      w.V = read_matrix(doc, "V", dy, dh);
      model.weights = std::move(w);
    } else {
      LstmWeights w;
      w.W_g = read_matrix(doc, "W_g", dh, dx);
      w.W_r = read_matrix(doc, "W_r", dh, dx);
      w.W_o = read_matrix(doc, "W_o", dh, dx);
      w.W_c = read_matrix(doc, "W_c", dh, dx);
      w.U_g = read_matrix(doc, "U_g", dh, dh);
      w.U_r = read_matrix(doc, "U_r", dh, dh);
      w.U_o = read_matrix(doc, "U_o", dh, dh);
      w.U_c = read_matrix(doc, "U_c", dh, dh);
      w.V = read_matrix(doc, "V", dy, dh);
      model.weights = std::move(w);
    }
  }
  try {
    validate(model.weights);
  } catch (const InvalidInput& e) {
    throw DimensionMismatch(e.what(), "dims");
  }
  return model;
}

void save_model(const Model& model, const std::string& path) { write_file(path, model_to_json(model)); }

Model load_model(const std::string& path) { return model_from_json(read_file(path)); }

std::string dataset_to_json(const SequenceDataset& data) {
  data.validate();
  std::ostringstream os;
  os << "{\n  \"format_version\": " << kFormatVersion << ",\n  \"kind\": \"dataset\",\n  \"m\": "
     << data.m() << ",\n  \"T\": " << data.T() << ",\n  \"d_x\": " << data.d_x
     << ",\n  \"K\": " << data.K << ",\n  \"B_x\": " << num(data.B_x)
     << ",\n  \"seed\": " << data.seed << ",\n  \"sequences\": [";
  for (std::size_t i = 0; i < data.m(); ++i) {
    os << (i ? "," : "") << "\n    {\"inputs\": [";
    for (std::size_t t = 0; t < data.T(); ++t) {
      os << (t ? ", " : "") << "[";
      const Vector& x = data.inputs[i][t];
      for (std::size_t k = 0; k < x.size(); ++k) os << (k ? ", " : "") << num(x[k]);
      os << "]";
    }
    os << "], \"labels\": [";
    for (std::size_t t = 0; t < data.T(); ++t) os << (t ? ", " : "") << data.labels[i][t];
    os << "]}";
  }
  os << "\n  ]\n}\n";
  return os.str();
}

SequenceDataset dataset_from_json(std::string_view text) {
  const json doc = parse(text);
  if (!doc.is_object()) throw ParseError("dataset file must be a JSON object", "");
  check_version(doc);
  SequenceDataset ds;
  const std::size_t m = count(doc, "m", "m");
  const std::size_t T = count(doc, "T", "T");
  ds.d_x = count(doc, "d_x", "d_x");
  ds.K = static_cast<int>(count(doc, "K", "K"));
  ds.B_x = number(field(doc, "B_x", "B_x"), "B_x");
  if (doc.contains("seed")) ds.seed = doc.at("seed").get<std::uint64_t>();
  const json& seqs = field(doc, "sequences", "sequences");
  if (!seqs.is_array() || seqs.size() != m) {
    throw DimensionMismatch("'sequences' must hold m = " + std::to_string(m) + " entries",
                            "sequences");
  }
  for (std::size_t i = 0; i < m; ++i) {
    const std::string base = "sequences[" + std::to_string(i) + "]";
    const json& in = field(seqs[i], "inputs", base + ".inputs");
    const json& lab = field(seqs[i], "labels", base + ".labels");
    if (!in.is_array() || in.size() != T || !lab.is_array() || lab.size() != T) {
      throw DimensionMismatch(base + " must hold T = " + std::to_string(T) + " steps", base);
    }
    Sequence xs;
    std::vector<int> zs;
    for (std::size_t t = 0; t < T; ++t) {
      if (!in[t].is_array() || in[t].size() != ds.d_x) {
        throw DimensionMismatch(base + ".inputs has a row of the wrong width", base + ".inputs");
      }
      Vector x;
      for (const json& v : in[t]) x.push_back(number(v, base + ".inputs"));
      xs.push_back(std::move(x));
      if (!lab[t].is_number_integer()) throw ParseError(base + ".labels must be integers", base + ".labels");
      zs.push_back(lab[t].get<int>());
    }
    ds.inputs.push_back(std::move(xs));
    ds.labels.push_back(std::move(zs));
  }
  try {
    ds.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(e.what(), "sequences");
  }
  return ds;
}

void save_dataset(const SequenceDataset& data, const std::string& path) {
  write_file(path, dataset_to_json(data));
}

SequenceDataset load_dataset(const std::string& path) { return dataset_from_json(read_file(path)); }

}  // namespace rnngen
