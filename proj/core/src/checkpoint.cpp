#include "realera/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "realera/errors.hpp"

namespace realera {

namespace {

constexpr char kMagic[7] = {'R', 'L', 'E', 'R', 'A', '1', '\0'};

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  put_u64(buf, bits);
}

class Reader {
public:
  Reader(const std::string& buf, const std::string& path)
      : buf_(buf), path_(path) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(u(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
  std::uint64_t u64() { return u(8); }
  std::uint8_t u8() { return static_cast<std::uint8_t>(u(1)); }

  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string out = buf_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t pos() const { return pos_; }

private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size())
      throw IoError("checkpoint '" + path_ + "' truncated at byte " +
                    std::to_string(pos_));
  }
  std::uint64_t u(int n) {
    need(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(buf_[pos_ + i]))
           << (8 * i);
    pos_ += n;
    return v;
  }
  const std::string& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::string& buf) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()),
            static_cast<uInt>(buf.size())));
}

std::string encode_container(const std::vector<NamedArray>& arrays) {
  std::string buf;
  buf.append(kMagic, sizeof kMagic);
  put_u32(buf, kCheckpointVersion);
  put_u32(buf, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& arr : arrays) {
    if (arr.name.size() > 0xffff)
      throw ValidationError("array name too long: " + arr.name);
    if (arr.dims.size() > 0xff)
      throw ValidationError("array rank too large: " + arr.name);
    if (arr.element_count() != arr.data.size())
      throw ValidationError("array '" + arr.name +
                            "' dims do not match data size");
    put_u16(buf, static_cast<std::uint16_t>(arr.name.size()));
    buf.append(arr.name);
    buf.push_back(static_cast<char>(arr.dims.size()));
    for (const auto d : arr.dims) put_u64(buf, d);
    for (const double v : arr.data) put_f64(buf, v);
  }
  put_u32(buf, crc_of(buf));
  return buf;
}

std::vector<double> matrix_rowmajor(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

NamedArray matrix_array(const std::string& name, const Eigen::MatrixXd& m) {
  return {name,
          {static_cast<std::uint64_t>(m.rows()),
           static_cast<std::uint64_t>(m.cols())},
          matrix_rowmajor(m)};
}

NamedArray vector_array(const std::string& name, const Eigen::VectorXd& v) {
  return {name,
          {static_cast<std::uint64_t>(v.size())},
          std::vector<double>(v.data(), v.data() + v.size())};
}

Eigen::MatrixXd as_matrix(const NamedArray& arr) {
  if (arr.dims.size() != 2)
    throw IoError("array '" + arr.name + "' is not rank-2");
  const auto rows = static_cast<Eigen::Index>(arr.dims[0]);
  const auto cols = static_cast<Eigen::Index>(arr.dims[1]);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = arr.data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

Eigen::VectorXd as_vector(const NamedArray& arr) {
  if (arr.dims.size() != 1)
    throw IoError("array '" + arr.name + "' is not rank-1");
  return Eigen::Map<const Eigen::VectorXd>(
      arr.data.data(), static_cast<Eigen::Index>(arr.dims[0]));
}

// u64 -> two u32 halves as exact doubles (doubles are exact below 2^32).
void push_seed(std::vector<double>& v, std::uint64_t seed) {
  v.push_back(static_cast<double>(seed & 0xffffffffULL));
  v.push_back(static_cast<double>(seed >> 32));
}

std::uint64_t pop_seed(const std::vector<double>& v, std::size_t at) {
  return static_cast<std::uint64_t>(v.at(at)) |
         (static_cast<std::uint64_t>(v.at(at + 1)) << 32);
}

}  // namespace

std::uint64_t NamedArray::element_count() const {
  std::uint64_t n = 1;
  for (const auto d : dims) n *= d;
  return n;
}

void write_container(const std::filesystem::path& path,
                     const std::vector<NamedArray>& arrays) {
  const std::string buf = encode_container(arrays);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

std::vector<NamedArray> read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());

  if (buf.size() < sizeof kMagic + 4 + 4 + 4)
    throw IoError("checkpoint '" + path.string() + "' too small");
  const std::string body = buf.substr(0, buf.size() - 4);
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(
                  static_cast<unsigned char>(buf[buf.size() - 4 + i]))
              << (8 * i);
  if (crc_of(body) != stored)
    throw IoError("checkpoint '" + path.string() + "' failed CRC check");

  Reader r(body, path.string());
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
    throw IoError("checkpoint '" + path.string() + "' has wrong magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw IoError("checkpoint '" + path.string() + "' has version " +
                  std::to_string(version) + ", expected " +
                  std::to_string(kCheckpointVersion));
  const std::uint32_t count = r.u32();
  std::vector<NamedArray> arrays;
  arrays.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray arr;
    const auto name_len = r.u16();
    arr.name = r.bytes(name_len);
    const auto rank = r.u8();
    arr.dims.resize(rank);
    for (auto& d : arr.dims) d = r.u64();
    const auto n = arr.element_count();
    arr.data.resize(n);
    for (auto& v : arr.data) v = r.f64();
    arrays.push_back(std::move(arr));
  }
  if (r.pos() != body.size())
    throw IoError("checkpoint '" + path.string() + "' has trailing bytes");
  return arrays;
}

const NamedArray& find_array(const std::vector<NamedArray>& arrays,
                             const std::string& name) {
  for (const auto& arr : arrays)
    if (arr.name == name) return arr;
  throw IoError("checkpoint is missing array '" + name + "'");
}

bool has_array(const std::vector<NamedArray>& arrays, const std::string& name) {
  for (const auto& arr : arrays)
    if (arr.name == name) return true;
  return false;
}

std::vector<NamedArray> vocabulary_to_arrays(const ConceptVocabulary& vocab) {
  std::vector<NamedArray> arrays;
  NamedArray meta;
  meta.name = "vocab/meta";
  meta.data.push_back(static_cast<double>(vocab.dim));
  push_seed(meta.data, vocab.seed);
  meta.dims = {meta.data.size()};
  arrays.push_back(std::move(meta));
  for (const auto& [id, emb] : vocab.concepts)
    arrays.push_back(vector_array("vocab/" + id, emb));
  return arrays;
}

ConceptVocabulary vocabulary_from_arrays(
    const std::vector<NamedArray>& arrays) {
  const NamedArray& meta = find_array(arrays, "vocab/meta");
  ConceptVocabulary vocab;
  vocab.dim = static_cast<int>(meta.data.at(0));
  vocab.seed = pop_seed(meta.data, 1);
  for (const auto& arr : arrays) {
    if (arr.name.rfind("vocab/", 0) != 0 || arr.name == "vocab/meta") continue;
    vocab.concepts.emplace_back(arr.name.substr(6), as_vector(arr));
  }
  if (vocab.concepts.empty())
    throw IoError("checkpoint contains no vocabulary embeddings");
  return vocab;
}

std::vector<NamedArray> denoiser_to_arrays(const ToyDenoiser& model) {
  const auto& cfg = model.cfg;
  std::vector<NamedArray> arrays;
  NamedArray meta;
  meta.name = "denoiser/config";
  meta.data = {static_cast<double>(cfg.latent_dim),
               static_cast<double>(cfg.cond_dim),
               static_cast<double>(cfg.hidden),
               static_cast<double>(cfg.time_features),
               static_cast<double>(cfg.n_tokens),
               cfg.init_scale};
  meta.dims = {meta.data.size()};
  arrays.push_back(std::move(meta));
  arrays.push_back(matrix_array("denoiser/input_proj", model.input_proj));
  arrays.push_back(matrix_array("denoiser/time_embed", model.time_embed));
  arrays.push_back(matrix_array("denoiser/wq", model.wq));
  for (std::size_t i = 0; i < model.attn.layers.size(); ++i) {
    arrays.push_back(matrix_array("attn/" + std::to_string(i) + "/wk",
                                  model.attn.layers[i].wk));
    arrays.push_back(matrix_array("attn/" + std::to_string(i) + "/wv",
                                  model.attn.layers[i].wv));
  }
  arrays.push_back(matrix_array("denoiser/mlp1", model.mlp1));
  arrays.push_back(matrix_array("denoiser/mlp2", model.mlp2));
  arrays.push_back(matrix_array("denoiser/output_proj", model.output_proj));
  return arrays;
}

ToyDenoiser denoiser_from_arrays(const std::vector<NamedArray>& arrays) {
  const NamedArray& meta = find_array(arrays, "denoiser/config");
  ToyDenoiser m;
  m.cfg.latent_dim = static_cast<int>(meta.data.at(0));
  m.cfg.cond_dim = static_cast<int>(meta.data.at(1));
  m.cfg.hidden = static_cast<int>(meta.data.at(2));
  m.cfg.time_features = static_cast<int>(meta.data.at(3));
  m.cfg.n_tokens = static_cast<int>(meta.data.at(4));
  m.cfg.init_scale = meta.data.at(5);
  m.cfg.validate();
  m.input_proj = as_matrix(find_array(arrays, "denoiser/input_proj"));
  m.time_embed = as_matrix(find_array(arrays, "denoiser/time_embed"));
  m.wq = as_matrix(find_array(arrays, "denoiser/wq"));
  m.attn.d = m.cfg.cond_dim;
  for (std::size_t i = 0;; ++i) {
    const std::string wk_name = "attn/" + std::to_string(i) + "/wk";
    if (!has_array(arrays, wk_name)) break;
    CrossAttentionWeights::Layer layer;
    layer.wk = as_matrix(find_array(arrays, wk_name));
    layer.wv = as_matrix(find_array(arrays, "attn/" + std::to_string(i) + "/wv"));
    m.attn.layers.push_back(std::move(layer));
  }
  if (m.attn.layers.empty())
    throw IoError("checkpoint contains no attention layers");
  m.mlp1 = as_matrix(find_array(arrays, "denoiser/mlp1"));
  m.mlp2 = as_matrix(find_array(arrays, "denoiser/mlp2"));
  m.output_proj = as_matrix(find_array(arrays, "denoiser/output_proj"));
  return m;
}

std::vector<NamedArray> schedule_to_arrays(const NoiseSchedule& schedule) {
  return {vector_array("schedule/betas", schedule.betas)};
}

NoiseSchedule schedule_from_arrays(const std::vector<NamedArray>& arrays) {
  NoiseSchedule s;
  s.betas = as_vector(find_array(arrays, "schedule/betas"));
  s.steps = static_cast<int>(s.betas.size());
  s.alphas_bar.resize(s.steps);
  double running = 1.0;
  for (int t = 0; t < s.steps; ++t) {
    running *= 1.0 - s.betas[t];
    s.alphas_bar[t] = running;
  }
  return s;
}

std::vector<NamedArray> dataset_to_arrays(const LatentDataset& dataset) {
  std::vector<NamedArray> arrays;
  NamedArray meta;
  meta.name = "dataset/meta";
  meta.data.push_back(dataset.std_dev);
  push_seed(meta.data, dataset.seed);
  meta.dims = {meta.data.size()};
  arrays.push_back(std::move(meta));
  NamedArray means;
  means.name = "dataset/means";
  const auto n = dataset.means.size();
  const auto k = static_cast<std::size_t>(n ? dataset.means[0].size() : 0);
  means.dims = {n, k};
  for (const auto& mu : dataset.means)
    means.data.insert(means.data.end(), mu.data(), mu.data() + mu.size());
  arrays.push_back(std::move(means));
  return arrays;
}

LatentDataset dataset_from_arrays(const std::vector<NamedArray>& arrays) {
  const NamedArray& meta = find_array(arrays, "dataset/meta");
  LatentDataset ds;
  ds.std_dev = meta.data.at(0);
  ds.seed = pop_seed(meta.data, 1);
  const NamedArray& means = find_array(arrays, "dataset/means");
  if (means.dims.size() != 2) throw IoError("dataset/means is not rank-2");
  const auto n = means.dims[0];
  const auto k = static_cast<Eigen::Index>(means.dims[1]);
  for (std::uint64_t i = 0; i < n; ++i)
    ds.means.push_back(Eigen::Map<const Eigen::VectorXd>(
        means.data.data() + i * means.dims[1], k));
  return ds;
}

std::uint32_t vocabulary_hash(const ConceptVocabulary& vocab) {
  // Hash the body only: a CRC-terminated message has a constant CRC (the
  // CRC-32 residue), so including the trailing checksum would collapse every
  // vocabulary to the same hash.
  std::string buf = encode_container(vocabulary_to_arrays(vocab));
  buf.resize(buf.size() - 4);
  return crc_of(buf);
}

void save_model_state(const std::filesystem::path& path, const ModelState& st) {
  std::vector<NamedArray> arrays = vocabulary_to_arrays(st.vocab);
  for (auto& a : schedule_to_arrays(st.schedule)) arrays.push_back(std::move(a));
  for (auto& a : dataset_to_arrays(st.dataset)) arrays.push_back(std::move(a));
  for (auto& a : denoiser_to_arrays(st.model)) arrays.push_back(std::move(a));
  write_container(path, arrays);
}

ModelState load_model_state(const std::filesystem::path& path) {
  const std::vector<NamedArray> arrays = read_container(path);
  ModelState st;
  st.vocab = vocabulary_from_arrays(arrays);
  st.schedule = schedule_from_arrays(arrays);
  st.dataset = dataset_from_arrays(arrays);
  st.model = denoiser_from_arrays(arrays);
  return st;
}

}  // namespace realera
