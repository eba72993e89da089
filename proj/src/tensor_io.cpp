#include "tnvault/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "tnvault/errors.hpp"

namespace tnvault {

namespace {

constexpr char kDtMagic[4] = {'D', 'T', 'E', 'N'};

static_assert(std::endian::native == std::endian::little,
              "tensor files assume a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T take(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  require(pos + sizeof(T) <= bytes.size(), ErrorCode::kFormatError,
          "truncated tensor data");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

std::vector<std::uint8_t> encode_dt(const DenseTensor& t) {
  require(t.order() <= 255, ErrorCode::kFormatError, "too many modes");
  std::vector<std::uint8_t> out;
  out.reserve(6 + 8 * t.order() + 8 * t.size());
  out.insert(out.end(), kDtMagic, kDtMagic + 4);
  out.push_back(kDtVersion);
  out.push_back(static_cast<std::uint8_t>(t.order()));
  for (auto s : t.shape()) put<std::uint64_t>(out, s);
  for (double v : t.data()) put<double>(out, v);
  return out;
}

DenseTensor decode_dt(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 6 && std::memcmp(bytes.data(), kDtMagic, 4) == 0,
          ErrorCode::kFormatError, "missing DTEN magic");
  require(bytes[4] == kDtVersion, ErrorCode::kFormatError,
          "unsupported .dt version " + std::to_string(bytes[4]));
  const std::size_t n = bytes[5];
  require(n >= 1, ErrorCode::kFormatError, "tensor with zero modes");
  std::size_t pos = 6;
  Shape shape(n);
  for (auto& s : shape) {
    const auto v = take<std::uint64_t>(bytes, pos);
    require(v >= 1, ErrorCode::kFormatError, "zero mode size");
    s = static_cast<std::size_t>(v);
  }
  const std::size_t count = shape_product(shape);
  require(bytes.size() == pos + 8 * count, ErrorCode::kFormatError,
          "payload length does not match shape " + shape_string(shape));
  std::vector<double> data(count);
  std::memcpy(data.data(), bytes.data() + pos, 8 * count);
  return DenseTensor(std::move(shape), std::move(data));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIoError,
          "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIoError,
          "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::kIoError,
          "short write to " + path.string());
}

void write_dt(const std::filesystem::path& path, const DenseTensor& t) {
  write_file_bytes(path, encode_dt(t));
}

DenseTensor read_dt(const std::filesystem::path& path) {
  return decode_dt(read_file_bytes(path));
}

DenseTensor read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIoError,
          "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        fail(ErrorCode::kFormatError, "bad CSV cell '" + cell + "'");
      }
    }
    require(rows.empty() || row.size() == rows.front().size(),
            ErrorCode::kFormatError, "ragged CSV row");
    rows.push_back(std::move(row));
  }
  require(!rows.empty() && !rows.front().empty(), ErrorCode::kFormatError,
          "empty CSV");
  const std::size_t r = rows.size(), c = rows.front().size();
  DenseTensor t({r, c});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) t[i + r * j] = rows[i][j];
  }
  return t;
}

void write_csv(const std::filesystem::path& path, const DenseTensor& t) {
  require(t.order() <= 2, ErrorCode::kShapeMismatch, "CSV holds 2-D data");
  const std::size_t r = t.dim(0), c = t.order() == 2 ? t.dim(1) : 1;
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIoError,
          "cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      if (j) out << ',';
      out << t[i + r * j];
    }
    out << '\n';
  }
}

namespace {

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string pnm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (std::isspace(bytes[pos])) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) {
    tok.push_back(static_cast<char>(bytes[pos++]));
  }
  require(!tok.empty(), ErrorCode::kFormatError, "truncated PNM header");
  return tok;
}

std::size_t pnm_number(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  const std::string tok = pnm_token(bytes, pos);
  require(std::all_of(tok.begin(), tok.end(),
                      [](unsigned char c) { return std::isdigit(c); }),
          ErrorCode::kFormatError, "bad PNM number '" + tok + "'");
  return std::stoul(tok);
}

}  // namespace

DenseTensor read_pnm(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t pos = 0;
  const std::string magic = pnm_token(bytes, pos);
  require(magic == "P2" || magic == "P3" || magic == "P5" || magic == "P6",
          ErrorCode::kFormatError, "unsupported PNM magic " + magic);
  const bool color = magic == "P3" || magic == "P6";
  const bool binary = magic == "P5" || magic == "P6";
  const std::size_t width = pnm_number(bytes, pos);
  const std::size_t height = pnm_number(bytes, pos);
  const std::size_t maxval = pnm_number(bytes, pos);
  require(width >= 1 && height >= 1, ErrorCode::kFormatError,
          "empty image");
  require(maxval >= 1 && maxval <= 255, ErrorCode::kFormatError,
          "only 8-bit PNM images are supported");
  const std::size_t channels = color ? 3 : 1;
  const std::size_t count = width * height * channels;
  std::vector<double> samples(count);
  if (binary) {
    ++pos;  // single whitespace after maxval
    require(bytes.size() >= pos + count, ErrorCode::kFormatError,
            "truncated PNM raster");
    for (std::size_t i = 0; i < count; ++i) samples[i] = bytes[pos + i];
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      samples[i] = static_cast<double>(pnm_number(bytes, pos));
    }
  }
  Shape shape = color ? Shape{height, width, 3} : Shape{height, width};
  DenseTensor t(shape);
  // Raster order is row-major with interleaved channels.
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        t[y + height * (x + width * c)] =
            samples[(y * width + x) * channels + c];
      }
    }
  }
  return t;
}

bool is_image_path(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

DenseTensor read_tensor(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".csv") return read_csv(path);
  if (is_image_path(path)) return read_pnm(path);
  return read_dt(path);
}

}  // namespace tnvault
