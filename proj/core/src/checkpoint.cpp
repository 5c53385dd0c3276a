#include "evoes/checkpoint.hpp"

#include "evoes/error.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace evoes {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'E', 'S'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

void put_vec(std::string& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(std::string("corrupt checkpoint: truncated while reading ") + what);
    }
  }
  std::uint64_t u(int width, const char* what) {
    need(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u(8, what)); }
  Eigen::VectorXd vec(std::size_t n, const char* what) {
    need(n * 8, what);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = f64(what);
    return v;
  }
  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& state) {
  const auto means = component_means(state.dist);
  const std::size_t k = means.size();
  const std::size_t d = dim(state.dist);
  if (state.optimizer.m.size() != k || state.optimizer.v.size() != k) {
    throw CheckpointError("optimizer state does not match the number of components");
  }
  const std::size_t o = static_cast<std::size_t>(state.normalizer.mean.size());

  nlohmann::json header;
  header["config"] = config_to_map(state.config);
  header["distribution"] = std::holds_alternative<IsoGaussian>(state.dist) ? "iso_gaussian" : "gaussian_mixture";
  header["components"] = k;
  header["dim"] = d;
  header["generation"] = state.generation;
  header["adam_t"] = state.optimizer.t;
  header["normalizer_dim"] = o;
  header["normalizer_count"] = state.normalizer.count;
  header["grad_norms"] = state.grad_norms.size();
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  put_u32(out, state.version);
  put_u64(out, text.size());
  out += text;
  put_f64(out, sigma_of(state.dist));
  for (const auto& m : means) put_vec(out, m);
  for (const auto& m : state.optimizer.m) put_vec(out, m);
  for (const auto& v : state.optimizer.v) put_vec(out, v);
  put_vec(out, state.normalizer.mean);
  put_vec(out, state.normalizer.m2);
  for (double g : state.grad_norms) put_f64(out, g);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  const std::string magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw CheckpointError("corrupt checkpoint: bad magic");
  const auto version = static_cast<std::uint32_t>(r.u(4, "version"));
  if (version != kCheckpointVersion) {
    throw CheckpointError("unknown checkpoint version " + std::to_string(version) + " (this build reads version " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t header_len = r.u(8, "header length");
  if (header_len > bytes.size()) throw CheckpointError("corrupt checkpoint: header length exceeds file size");
  const std::string text = r.take(static_cast<std::size_t>(header_len), "header");

  Checkpoint out;
  out.version = version;
  std::size_t k = 0, d = 0, o = 0, g = 0;
  bool mixture = false;
  try {
    const auto header = nlohmann::json::parse(text);
    out.config = config_from_map(header.at("config").get<std::map<std::string, std::string>>());
    const auto kind = header.at("distribution").get<std::string>();
    if (kind != "iso_gaussian" && kind != "gaussian_mixture") throw CheckpointError("corrupt checkpoint: unknown distribution kind");
    mixture = kind == "gaussian_mixture";
    k = header.at("components").get<std::size_t>();
    d = header.at("dim").get<std::size_t>();
    out.generation = header.at("generation").get<std::int64_t>();
    out.optimizer.t = header.at("adam_t").get<std::int64_t>();
    o = header.at("normalizer_dim").get<std::size_t>();
    out.normalizer.count = header.at("normalizer_count").get<std::int64_t>();
    g = header.at("grad_norms").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  } catch (const ValidationError& e) {
    throw CheckpointError(std::string("corrupt checkpoint config: ") + e.what());
  }
  if (k == 0 || d == 0 || (mixture && k < 2) || (!mixture && k != 1)) {
    throw CheckpointError("corrupt checkpoint: inconsistent component count");
  }
  // Guard against absurd counts before allocating.
  const std::size_t remaining = bytes.size() - 16 - static_cast<std::size_t>(header_len);
  if (k > remaining || d > remaining || o > remaining || g > remaining ||
      (1 + 3 * k * d + 2 * o + g) * 8 != remaining) {
    throw CheckpointError("corrupt checkpoint: payload size does not match header");
  }

  const double sigma = r.f64("sigma");
  std::vector<ParamVec> means;
  for (std::size_t c = 0; c < k; ++c) means.push_back(r.vec(d, "means"));
  for (std::size_t c = 0; c < k; ++c) out.optimizer.m.push_back(r.vec(d, "optimizer moments"));
  for (std::size_t c = 0; c < k; ++c) out.optimizer.v.push_back(r.vec(d, "optimizer moments"));
  out.normalizer.mean = r.vec(o, "normalizer");
  out.normalizer.m2 = r.vec(o, "normalizer");
  for (std::size_t i = 0; i < g; ++i) out.grad_norms.push_back(r.f64("gradient norms"));
  if (!r.done()) throw CheckpointError("corrupt checkpoint: trailing bytes");

  if (mixture) {
    out.dist = GaussianMixture{std::move(means), sigma};
  } else {
    out.dist = IsoGaussian{std::move(means.front()), sigma};
  }
  return out;
}

void save_checkpoint(const Checkpoint& state, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(state);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace evoes
