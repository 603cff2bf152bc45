#include "tap3d/npy.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <optional>
#include <string_view>

#include "tap3d/error.hpp"

namespace tap3d::npy {

static_assert(std::endian::native == std::endian::little, "only little-endian hosts are supported");

namespace {

constexpr std::string_view kMagic = "\x93NUMPY";
constexpr std::size_t kAlign = 64;
// Extra header room numpy leaves so the first axis can grow in place.
constexpr std::size_t kGrowthAxisDigits = 21;

std::optional<DType> dtype_from_descr(std::string_view d) {
  if (d.size() != 3) return std::nullopt;
  const char order = d[0];
  const std::string_view code = d.substr(1);
  if (code == "b1" && (order == '|' || order == '<' || order == '=')) return DType::Bool;
  if (code == "u1" && (order == '|' || order == '<' || order == '=')) return DType::UInt8;
  if (order != '<') return std::nullopt;
  if (code == "i4") return DType::Int32;
  if (code == "i8") return DType::Int64;
  if (code == "f4") return DType::Float32;
  if (code == "f8") return DType::Float64;
  return std::nullopt;
}

/// Minimal reader for the dictionary literal in the header.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  void parse(std::string& descr, bool& fortran, std::vector<std::size_t>& shape) {
    bool have_descr = false, have_order = false, have_shape = false;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = quoted();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        descr = quoted();
        have_descr = true;
      } else if (key == "fortran_order") {
        fortran = boolean();
        have_order = true;
      } else if (key == "shape") {
        shape = tuple();
        have_shape = true;
      } else {
        fail("unexpected key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        fail("expected ',' or '}'");
      }
    }
    if (!have_descr || !have_order || !have_shape) fail("missing descr, fortran_order or shape");
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::BadHeader, what + " at offset " + std::to_string(pos_));
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string quoted() {
    const char q = peek();
    if (q != '\'' && q != '"') fail("expected a quoted string");
    const std::size_t end = text_.find(q, pos_ + 1);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(text_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return out;
  }
  bool boolean() {
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }
  std::vector<std::size_t> tuple() {
    std::vector<std::size_t> out;
    expect('(');
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return out;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected a dimension");
      std::size_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v = v * 10 + static_cast<std::size_t>(text_[pos_++] - '0');
        if (v > (std::size_t{1} << 48)) fail("dimension too large");
      }
      out.push_back(v);
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ')') {
        fail("expected ',' or ')'");
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string shape_literal(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k > 0) s += ", ";
    s += std::to_string(shape[k]);
  }
  if (shape.size() == 1) s += ",";
  return s + ")";
}

template <typename T>
Array make_array(DType dtype, std::vector<std::size_t> shape, std::span<const T> values) {
  Array a{dtype, std::move(shape), {}};
  if (a.size() != values.size()) {
    throw Error(ErrorCode::ShapeMismatch, "shape holds " + std::to_string(a.size()) +
                                              " elements but " + std::to_string(values.size()) +
                                              " were given");
  }
  a.data.resize(values.size() * sizeof(T));
  if (!values.empty()) std::memcpy(a.data.data(), values.data(), a.data.size());
  return a;
}

template <typename T>
T load(const std::byte* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace

std::size_t item_size(DType dtype) {
  switch (dtype) {
    case DType::Bool:
    case DType::UInt8: return 1;
    case DType::Int32:
    case DType::Float32: return 4;
    case DType::Int64:
    case DType::Float64: return 8;
  }
  return 1;
}

std::string descr(DType dtype) {
  switch (dtype) {
    case DType::Bool: return "|b1";
    case DType::UInt8: return "|u1";
    case DType::Int32: return "<i4";
    case DType::Int64: return "<i8";
    case DType::Float32: return "<f4";
    case DType::Float64: return "<f8";
  }
  return "|u1";
}

std::size_t Array::size() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Array make_float64(std::vector<std::size_t> shape, std::span<const double> values) {
  return make_array<double>(DType::Float64, std::move(shape), values);
}

Array make_float32(std::vector<std::size_t> shape, std::span<const double> values) {
  std::vector<float> narrow(values.begin(), values.end());
  return make_array<float>(DType::Float32, std::move(shape), narrow);
}

Array make_bool(std::vector<std::size_t> shape, std::span<const std::uint8_t> values) {
  std::vector<std::uint8_t> flags(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) flags[k] = values[k] != 0 ? 1 : 0;
  return make_array<std::uint8_t>(DType::Bool, std::move(shape), flags);
}

Array make_int32(std::vector<std::size_t> shape, std::span<const std::int32_t> values) {
  return make_array<std::int32_t>(DType::Int32, std::move(shape), values);
}

std::vector<double> to_float64(const Array& array) {
  const std::size_t n = array.size();
  std::vector<double> out(n);
  const std::byte* p = array.data.data();
  switch (array.dtype) {
    case DType::Float64:
      for (std::size_t k = 0; k < n; ++k) out[k] = load<double>(p + 8 * k);
      return out;
    case DType::Float32:
      for (std::size_t k = 0; k < n; ++k) out[k] = static_cast<double>(load<float>(p + 4 * k));
      return out;
    default:
      throw Error(ErrorCode::UnsupportedDtype,
                  "expected a floating-point array, got " + descr(array.dtype));
  }
}

std::vector<std::uint8_t> to_flags(const Array& array) {
  if (array.dtype != DType::Bool && array.dtype != DType::UInt8) {
    throw Error(ErrorCode::UnsupportedDtype, "expected a bool or uint8 array, got " + descr(array.dtype));
  }
  std::vector<std::uint8_t> out(array.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = array.data[k] != std::byte{0} ? 1 : 0;
  return out;
}

std::vector<std::int32_t> to_int32(const Array& array) {
  std::vector<std::int32_t> out(array.size());
  const std::byte* p = array.data.data();
  switch (array.dtype) {
    case DType::Int32:
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = load<std::int32_t>(p + 4 * k);
      return out;
    case DType::Bool:
    case DType::UInt8:
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<std::int32_t>(p[k]);
      return out;
    default:
      throw Error(ErrorCode::UnsupportedDtype, "expected an integer array, got " + descr(array.dtype));
  }
}

Array parse(std::span<const std::byte> bytes) {
  if (bytes.size() < kMagic.size() + 2 ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw Error(ErrorCode::BadMagic, "missing \\x93NUMPY prefix");
  }
  const auto major = static_cast<unsigned>(bytes[6]);
  const auto minor = static_cast<unsigned>(bytes[7]);
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1 && minor == 0) {
    if (bytes.size() < 10) throw Error(ErrorCode::TruncatedData, "header length is cut off");
    header_len = load<std::uint16_t>(bytes.data() + 8);
    offset = 10;
  } else if (major == 2 && minor == 0) {
    if (bytes.size() < 12) throw Error(ErrorCode::TruncatedData, "header length is cut off");
    header_len = load<std::uint32_t>(bytes.data() + 8);
    offset = 12;
  } else {
    throw Error(ErrorCode::BadHeader,
                "unsupported format version " + std::to_string(major) + "." + std::to_string(minor));
  }
  if (bytes.size() < offset + header_len) throw Error(ErrorCode::TruncatedData, "header is cut off");

  const std::string_view header(reinterpret_cast<const char*>(bytes.data() + offset), header_len);
  std::string descr_text;
  bool fortran = false;
  std::vector<std::size_t> shape;
  HeaderParser(header).parse(descr_text, fortran, shape);

  const auto dtype = dtype_from_descr(descr_text);
  if (!dtype) throw Error(ErrorCode::UnsupportedDtype, "dtype '" + descr_text + "' is not supported");
  if (fortran) throw Error(ErrorCode::UnsupportedLayout, "Fortran-order arrays are not supported");

  Array out{*dtype, std::move(shape), {}};
  const std::size_t payload = out.size() * item_size(*dtype);
  const std::size_t start = offset + header_len;
  if (bytes.size() - start < payload) {
    throw Error(ErrorCode::TruncatedData, "expected " + std::to_string(payload) +
                                              " data bytes, found " +
                                              std::to_string(bytes.size() - start));
  }
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                  bytes.begin() + static_cast<std::ptrdiff_t>(start + payload));
  return out;
}

std::vector<std::byte> serialize(const Array& array) {
  if (array.data.size() != array.size() * item_size(array.dtype)) {
    throw Error(ErrorCode::ShapeMismatch, "array payload does not match its shape");
  }
  std::string dict = "{'descr': '" + descr(array.dtype) +
                     "', 'fortran_order': False, 'shape': " + shape_literal(array.shape) + ", }";
  if (!array.shape.empty()) {
    const std::size_t digits = std::to_string(array.shape.front()).size();
    if (digits < kGrowthAxisDigits) dict.append(kGrowthAxisDigits - digits, ' ');
  }

  std::size_t prefix = kMagic.size() + 2 + 2;
  bool v2 = false;
  std::size_t body = dict.size() + 1;
  std::size_t pad = kAlign - (body + prefix) % kAlign;
  if (body + pad > 0xffff) {
    v2 = true;
    prefix = kMagic.size() + 2 + 4;
    pad = kAlign - (body + prefix) % kAlign;
  }
  const std::size_t header_len = body + pad;

  std::vector<std::byte> out;
  out.reserve(prefix + header_len + array.data.size());
  auto push = [&out](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::byte*>(p);
    out.insert(out.end(), b, b + n);
  };
  push(kMagic.data(), kMagic.size());
  const std::uint8_t version[2] = {static_cast<std::uint8_t>(v2 ? 2 : 1), 0};
  push(version, 2);
  if (v2) {
    const auto len = static_cast<std::uint32_t>(header_len);
    push(&len, 4);
  } else {
    const auto len = static_cast<std::uint16_t>(header_len);
    push(&len, 2);
  }
  dict.append(pad, ' ');
  dict.push_back('\n');
  push(dict.data(), dict.size());
  push(array.data.data(), array.data.size());
  return out;
}

Array read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  try {
    return parse(std::as_bytes(std::span<const char>(raw)));
  } catch (const Error& e) {
    throw Error(e.code(), path.filename().string() + ": " + e.what());
  }
}

void write(const std::filesystem::path& path, const Array& array) {
  const auto bytes = serialize(array);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

}  // namespace tap3d::npy
