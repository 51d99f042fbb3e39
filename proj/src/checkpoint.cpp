#include "irm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "irm/errors.hpp"

namespace irm {
namespace {

constexpr char kMagic[8] = {'I', 'R', 'M', 'A', 'R', 'R', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "array container assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + at_, sizeof(T));
    at_ += sizeof(T);
    return v;
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(at_, n);
    at_ += n;
    return s;
  }

  bool done() const { return at_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (at_ + n > bytes_.size()) throw ValidationError("array container truncated");
  }

  const std::string& bytes_;
  std::size_t at_ = 0;
};

}  // namespace

std::size_t NamedArray::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string encode_arrays(std::span<const NamedArray> arrays) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const NamedArray& a : arrays) {
    if (a.element_count() != a.data.size()) {
      throw ValidationError("array '" + a.name + "' shape does not match its data");
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(a.dtype));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put<std::int64_t>(out, d);
    for (double v : a.data) {
      if (a.dtype == DType::f32) {
        put<float>(out, static_cast<float>(v));
      } else {
        put<double>(out, v);
      }
    }
  }
  return out;
}

std::vector<NamedArray> decode_arrays(const std::string& bytes) {
  Reader in(bytes);
  if (in.get_string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw ValidationError("not an array container (bad magic)");
  }
  const auto count = in.get<std::uint32_t>();
  std::vector<NamedArray> arrays;
  arrays.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = in.get_string(in.get<std::uint32_t>());
    const auto dtype = in.get<std::uint8_t>();
    if (dtype != static_cast<std::uint8_t>(DType::f64) &&
        dtype != static_cast<std::uint8_t>(DType::f32)) {
      throw ValidationError("array '" + a.name + "' has unknown dtype");
    }
    a.dtype = static_cast<DType>(dtype);
    const auto rank = in.get<std::uint32_t>();
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto d = in.get<std::int64_t>();
      if (d < 0) throw ValidationError("array '" + a.name + "' has a negative dimension");
      a.shape.push_back(d);
    }
    const std::size_t n = a.element_count();
    a.data.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      a.data.push_back(a.dtype == DType::f32 ? static_cast<double>(in.get<float>())
                                             : in.get<double>());
    }
    arrays.push_back(std::move(a));
  }
  if (!in.done()) throw ValidationError("trailing bytes after array container");
  return arrays;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ValidationError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_arrays(const std::filesystem::path& path, std::span<const NamedArray> arrays) {
  write_file_atomic(path, encode_arrays(arrays));
}

std::vector<NamedArray> read_arrays(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_arrays(buf.str());
}

NamedArray to_array(const std::string& name, const nn::Matrix& m) {
  NamedArray a;
  a.name = name;
  a.shape = {m.rows(), m.cols()};
  a.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.data.push_back(m(r, c));
  }
  return a;
}

nn::Matrix to_matrix(const NamedArray& a) {
  if (a.shape.size() != 2) throw ValidationError("array '" + a.name + "' is not 2-d");
  nn::Matrix m(a.shape[0], a.shape[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = a.data[k++];
  }
  return m;
}

void save_parameters(const std::filesystem::path& path, std::span<nn::Parameter* const> params) {
  std::vector<NamedArray> arrays;
  arrays.reserve(params.size());
  for (const nn::Parameter* p : params) arrays.push_back(to_array(p->name, p->value));
  write_arrays(path, arrays);
}

void load_parameters(const std::filesystem::path& path, std::span<nn::Parameter* const> params) {
  std::map<std::string, NamedArray> by_name;
  for (auto& a : read_arrays(path)) by_name.emplace(a.name, std::move(a));
  for (nn::Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw ValidationError("checkpoint has no parameter '" + p->name + "'");
    nn::Matrix m = to_matrix(it->second);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      throw ShapeError("checkpoint parameter '" + p->name + "' has the wrong shape");
    }
    p->value = std::move(m);
    p->zero_grad();
  }
}

}  // namespace irm
