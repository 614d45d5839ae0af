#include "carousel/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace carousel {
namespace {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

constexpr char kMagic[8] = {'C', 'R', 'S', 'L', 'M', 'D', 'L', '\0'};

enum class BodyTag : std::uint8_t { ItemScores = 0, Similarity = 1, DenseSimilarity = 2, Factor = 3 };

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw std::runtime_error("model file truncated");
  }
  return value;
}

template <typename T>
void put_array(std::ostream& out, const T* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
void get_array(std::istream& in, T* data, std::size_t n) {
  if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(T)))) {
    throw std::runtime_error("model file truncated");
  }
}

void put_dense(std::ostream& out, const Eigen::MatrixXd& m) {
  put<std::int64_t>(out, m.rows());
  put<std::int64_t>(out, m.cols());
  put_array(out, m.data(), static_cast<std::size_t>(m.size()));
}

Eigen::MatrixXd get_dense(std::istream& in) {
  const auto rows = get<std::int64_t>(in);
  const auto cols = get<std::int64_t>(in);
  if (rows < 0 || cols < 0) throw std::runtime_error("model file has a negative dimension");
  Eigen::MatrixXd m(rows, cols);
  get_array(in, m.data(), static_cast<std::size_t>(m.size()));
  return m;
}

}  // namespace

void save_model(std::ostream& out, const Model& model) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kModelFormatVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(model.family()));
  const ParamMap params = to_param_map(model.params);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [key, value] : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    put<double>(out, value);
  }
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, ItemScoresModel>) {
          put(out, BodyTag::ItemScores);
          put<std::int64_t>(out, body.scores.size());
          put_array(out, body.scores.data(), static_cast<std::size_t>(body.scores.size()));
        } else if constexpr (std::is_same_v<T, SimilarityModel>) {
          SparseRowMatrix<double> w = body.weights;
          w.makeCompressed();
          put(out, BodyTag::Similarity);
          put<std::int64_t>(out, w.rows());
          put<std::int64_t>(out, w.cols());
          put<std::int64_t>(out, w.nonZeros());
          put_array(out, w.outerIndexPtr(), static_cast<std::size_t>(w.rows() + 1));
          put_array(out, w.innerIndexPtr(), static_cast<std::size_t>(w.nonZeros()));
          put_array(out, w.valuePtr(), static_cast<std::size_t>(w.nonZeros()));
        } else if constexpr (std::is_same_v<T, DenseSimilarityModel>) {
          put(out, BodyTag::DenseSimilarity);
          put_dense(out, body.weights);
        } else {
          put(out, BodyTag::Factor);
          put_dense(out, body.user_factors);
          put_dense(out, body.item_factors);
        }
      },
      model.body);
  if (!out) throw std::runtime_error("failed writing model");
}

Model load_model(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a model file");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kModelFormatVersion) {
    throw std::runtime_error("unsupported model format version " + std::to_string(version));
  }
  const auto family_tag = get<std::uint8_t>(in);
  if (family_tag >= all_families().size()) throw std::runtime_error("unknown model family tag");
  const auto family = static_cast<Family>(family_tag);

  ParamMap params;
  const auto n_params = get<std::uint32_t>(in);
  for (std::uint32_t n = 0; n < n_params; ++n) {
    std::string key(get<std::uint32_t>(in), '\0');
    get_array(in, key.data(), key.size());
    params[key] = get<double>(in);
  }

  Model model{params_from_map(family, params), ItemScoresModel{}};
  switch (get<BodyTag>(in)) {
    case BodyTag::ItemScores: {
      ItemScoresModel body;
      body.scores.resize(get<std::int64_t>(in));
      get_array(in, body.scores.data(), static_cast<std::size_t>(body.scores.size()));
      model.body = std::move(body);
      break;
    }
    case BodyTag::Similarity: {
      const auto rows = get<std::int64_t>(in);
      const auto cols = get<std::int64_t>(in);
      const auto nnz = get<std::int64_t>(in);
      SimilarityModel body;
      body.weights.resize(rows, cols);
      body.weights.resizeNonZeros(nnz);
      get_array(in, body.weights.outerIndexPtr(), static_cast<std::size_t>(rows + 1));
      get_array(in, body.weights.innerIndexPtr(), static_cast<std::size_t>(nnz));
      get_array(in, body.weights.valuePtr(), static_cast<std::size_t>(nnz));
      model.body = std::move(body);
      break;
    }
    case BodyTag::DenseSimilarity:
      model.body = DenseSimilarityModel{get_dense(in)};
      break;
    case BodyTag::Factor: {
      FactorModel body;
      body.user_factors = get_dense(in);
      body.item_factors = get_dense(in);
      model.body = std::move(body);
      break;
    }
    default:
      throw std::runtime_error("unknown model body tag");
  }
  return model;
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_model(out, model);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_model(in);
}

}  // namespace carousel
