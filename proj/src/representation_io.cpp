#include "tnvault/representation_io.hpp"

#include <algorithm>
#include <fstream>

#include "tnvault/errors.hpp"
#include "tnvault/tensor_io.hpp"

namespace tnvault {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

DenseTensor matrix_block(const Matrix& m) {
  return DenseTensor({static_cast<std::size_t>(m.rows()),
                      static_cast<std::size_t>(m.cols())},
                     std::vector<double>(m.data(), m.data() + m.size()));
}

Matrix block_matrix(const DenseTensor& t) {
  require(t.order() == 2, ErrorCode::kShapeMismatch,
          "factor block must be 2-D, got " + shape_string(t.shape()));
  return t.as_matrix(t.dim(0), t.dim(1));
}

fs::path sidecar_path(const fs::path& tnc) {
  return fs::path(tnc.string() + ".json");
}

}  // namespace

Format format_of(const AnyRepresentation& rep) {
  return std::visit(
      Overloaded{[](const TTRepresentation&) { return Format::kTT; },
                 [](const TRRepresentation&) { return Format::kTR; },
                 [](const TuckerRepresentation&) { return Format::kTucker; },
                 [](const HTRepresentation&) { return Format::kHT; }},
      rep);
}

RepresentationStructure structure_of(const AnyRepresentation& rep) {
  RepresentationStructure s;
  s.format = format_of(rep);
  std::visit(Overloaded{[&](const CoreChain& c) {
                          s.mode_sizes = c.mode_sizes();
                          s.ranks = c.ranks();
                        },
                        [&](const TuckerRepresentation& t) {
                          s.mode_sizes = t.mode_sizes();
                          s.ranks = t.ranks();
                        },
                        [&](const HTRepresentation& h) {
                          s.mode_sizes = h.mode_sizes;
                          s.ranks = h.ranks;
                          s.tree = h.tree.to_string();
                        }},
             rep);
  return s;
}

RepresentationStructure structure_from_shapes(Format format,
                                              const std::vector<Shape>& shapes) {
  require(!shapes.empty(), ErrorCode::kShapeMismatch, "no blocks");
  RepresentationStructure s;
  s.format = format;
  switch (format) {
    case Format::kTT:
    case Format::kTR:
      for (const Shape& sh : shapes) {
        require(sh.size() == 3, ErrorCode::kShapeMismatch,
                "chain cores must be 3rd-order, got " + shape_string(sh));
        s.mode_sizes.push_back(sh[1]);
        s.ranks.push_back(sh[0]);
      }
      s.ranks.push_back(shapes.back()[2]);
      break;
    case Format::kTucker:
      for (std::size_t k = 0; k + 1 < shapes.size(); ++k) {
        require(shapes[k].size() == 2, ErrorCode::kShapeMismatch,
                "Tucker factor blocks must be 2-D");
        s.mode_sizes.push_back(shapes[k][0]);
        s.ranks.push_back(shapes[k][1]);
      }
      break;
    case Format::kHT:
      fail(ErrorCode::kInvalidArgument,
           "HT structure needs the dimension tree, not just shapes");
  }
  return s;
}

std::vector<DenseTensor> blocks_of(const AnyRepresentation& rep) {
  return std::visit(
      Overloaded{[](const CoreChain& c) { return c.cores; },
                 [](const TuckerRepresentation& t) {
                   std::vector<DenseTensor> out;
                   for (const auto& f : t.factors) out.push_back(matrix_block(f));
                   out.push_back(t.core);
                   return out;
                 },
                 [](const HTRepresentation& h) { return h.blocks; }},
      rep);
}

AnyRepresentation assemble(const RepresentationStructure& s,
                           std::vector<DenseTensor> blocks) {
  AnyRepresentation out;
  switch (s.format) {
    case Format::kTT: {
      TTRepresentation r;
      r.cores = std::move(blocks);
      r.validate();
      out = std::move(r);
      break;
    }
    case Format::kTR: {
      TRRepresentation r;
      r.cores = std::move(blocks);
      r.validate();
      out = std::move(r);
      break;
    }
    case Format::kTucker: {
      require(blocks.size() >= 2, ErrorCode::kShapeMismatch,
              "Tucker needs factors and a core");
      TuckerRepresentation r;
      r.core = std::move(blocks.back());
      blocks.pop_back();
      for (const auto& b : blocks) r.factors.push_back(block_matrix(b));
      r.validate();
      out = std::move(r);
      break;
    }
    case Format::kHT: {
      HTRepresentation r;
      r.tree = DimensionTree::parse(s.tree);
      r.mode_sizes = s.mode_sizes;
      r.ranks = s.ranks;
      r.blocks = std::move(blocks);
      r.validate();
      out = std::move(r);
      break;
    }
  }
  require(structure_of(out).mode_sizes == s.mode_sizes,
          ErrorCode::kShapeMismatch,
          "blocks do not match the recorded mode sizes");
  return out;
}

DenseTensor reconstruct(const AnyRepresentation& rep) {
  return std::visit([](const auto& r) { return reconstruct(r); }, rep);
}

std::size_t parameter_count(const AnyRepresentation& rep) {
  return std::visit([](const auto& r) { return r.parameter_count(); }, rep);
}

void validate(const AnyRepresentation& rep) {
  std::visit([](const auto& r) { r.validate(); }, rep);
}

json structure_to_json(const RepresentationStructure& s) {
  json j;
  j["format"] = format_name(s.format);
  j["mode_sizes"] = s.mode_sizes;
  j["ranks"] = s.ranks;
  if (s.format == Format::kHT) j["tree"] = s.tree;
  return j;
}

RepresentationStructure structure_from_json(const json& j) {
  try {
    RepresentationStructure s;
    s.format = parse_format(j.at("format").get<std::string>());
    s.mode_sizes = j.at("mode_sizes").get<Shape>();
    s.ranks = j.at("ranks").get<std::vector<std::size_t>>();
    if (s.format == Format::kHT) s.tree = j.at("tree").get<std::string>();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormatError, std::string("bad structure record: ") + e.what());
  }
}

std::vector<fs::path> write_tnc(const fs::path& dir,
                                const AnyRepresentation& rep) {
  fs::create_directories(dir);
  const auto structure = structure_of(rep);
  const auto blocks = blocks_of(rep);
  std::vector<fs::path> paths;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const fs::path p = dir / ("core_" + std::to_string(k) + ".tnc");
    write_dt(p, blocks[k]);
    json side = structure_to_json(structure);
    side["core_index"] = k;
    std::ofstream out(sidecar_path(p));
    require(static_cast<bool>(out), ErrorCode::kIoError,
            "cannot write " + sidecar_path(p).string());
    out << side.dump(2) << "\n";
    paths.push_back(p);
  }
  return paths;
}

TncBlock read_tnc(const fs::path& path) {
  TncBlock out;
  out.block = read_dt(path);
  std::ifstream in(sidecar_path(path));
  require(static_cast<bool>(in), ErrorCode::kIoError,
          "missing sidecar " + sidecar_path(path).string());
  json side;
  try {
    side = json::parse(in);
    out.core_index = side.at("core_index").get<std::size_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormatError,
         "bad sidecar " + sidecar_path(path).string() + ": " + e.what());
  }
  out.structure = structure_from_json(side);
  return out;
}

AnyRepresentation read_tnc_dir(const fs::path& dir) {
  std::vector<TncBlock> parts;
  require(fs::is_directory(dir), ErrorCode::kIoError,
          "not a directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("core_", 0) == 0 && entry.path().extension() == ".tnc") {
      parts.push_back(read_tnc(entry.path()));
    }
  }
  require(!parts.empty(), ErrorCode::kMissingFragment,
          "no core_<k>.tnc files in " + dir.string());
  std::sort(parts.begin(), parts.end(),
            [](const TncBlock& a, const TncBlock& b) {
              return a.core_index < b.core_index;
            });
  std::vector<DenseTensor> blocks;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    require(parts[k].core_index == k, ErrorCode::kMissingFragment,
            "core_" + std::to_string(k) + ".tnc is missing");
    require(parts[k].structure == parts[0].structure, ErrorCode::kFormatError,
            "sidecars disagree on the structure");
    blocks.push_back(std::move(parts[k].block));
  }
  return assemble(parts[0].structure, std::move(blocks));
}

}  // namespace tnvault
