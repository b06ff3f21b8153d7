#include "tomsyn/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "tomsyn/error.hpp"
#include "tomsyn/text.hpp"

static_assert(std::endian::native == std::endian::little,
              "blob format is little-endian; big-endian hosts unsupported");

namespace tomsyn {
namespace {

constexpr std::string_view kBlobMagic = "tomsyn-blob v1\n";
constexpr std::string_view kLabelsMagic = "tomsyn-labels v1";
constexpr std::string_view kSamplesMagic = "tomsyn-samples v1";
constexpr std::string_view kManifestMagic = "tomsyn-dataset-manifest v1";

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path.string());
  return f;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open: " + path.string());
  return f;
}

void expect_magic(std::istream& in, std::string_view magic,
                  const std::string& where) {
  std::string line;
  if (!std::getline(in, line) || line != magic) {
    throw IntegrityError(where + ": missing or wrong format magic (wanted '" +
                         std::string(magic) + "')");
  }
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in, const std::string& where) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IntegrityError(where + ": truncated header");
  return v;
}

void save_blob(const fs::path& path, const Dataset& ds) {
  auto f = open_out(path);
  f.write(kBlobMagic.data(), static_cast<std::streamsize>(kBlobMagic.size()));
  write_u64(f, static_cast<std::uint64_t>(ds.size()));
  write_u64(f, 3);
  write_u64(f, kGridSize);
  write_u64(f, kGridSize);
  write_u64(f, kPlaneCount);
  f.write(reinterpret_cast<const char*>(ds.inputs.data()),
          static_cast<std::streamsize>(ds.inputs.size() * sizeof(float)));
  if (!f.good()) throw InputError("write failed: " + path.string());
}

std::size_t load_blob(const fs::path& path, Dataset& ds) {
  auto f = open_in(path);
  std::string magic(kBlobMagic.size(), '\0');
  f.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!f || magic != kBlobMagic) {
    throw IntegrityError(path.string() + ": wrong blob magic");
  }
  const std::uint64_t count = read_u64(f, path.string());
  const std::uint64_t rank = read_u64(f, path.string());
  if (rank != 3 || read_u64(f, path.string()) != kGridSize ||
      read_u64(f, path.string()) != kGridSize ||
      read_u64(f, path.string()) != kPlaneCount) {
    throw IntegrityError(path.string() + ": unexpected tensor shape");
  }
  ds.inputs.resize(count * kInputSize);
  f.read(reinterpret_cast<char*>(ds.inputs.data()),
         static_cast<std::streamsize>(ds.inputs.size() * sizeof(float)));
  if (!f) throw IntegrityError(path.string() + ": truncated tensor data");
  f.peek();
  if (!f.eof()) throw IntegrityError(path.string() + ": trailing bytes");
  return count;
}

void save_labels(const fs::path& path, const Dataset& ds) {
  auto f = open_out(path);
  f << kLabelsMagic << '\n';
  std::string line;
  for (int i = 0; i < ds.size(); ++i) {
    line.clear();
    line += std::to_string(i);
    line += ' ';
    line += std::to_string(ds.label_target[i]);
    line += ' ';
    line += action_name(static_cast<Action>(ds.label_action[i]));
    line += ' ';
    line += std::to_string(ds.label_state[i]);
    const float* belief = ds.belief_row(i);
    for (int c = 0; c < kCellCount; ++c) {
      line += ' ';
      line += fmt_float(belief[c]);
    }
    line += '\n';
    f << line;
  }
  if (!f.good()) throw InputError("write failed: " + path.string());
}

void load_labels(const fs::path& path, std::size_t count, Dataset& ds) {
  auto f = open_in(path);
  expect_magic(f, kLabelsMagic, path.string());
  std::string line;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(f, line)) {
      throw IntegrityError(path.string() + ": fewer labels than samples");
    }
    const auto fields = split_fields(line);
    if (fields.size() != 4 + kCellCount) {
      throw IntegrityError(path.string() + ": malformed label line " +
                           std::to_string(i));
    }
    if (parse_int<std::size_t>(fields[0], "sample id") != i) {
      throw IntegrityError(path.string() + ": sample ids out of order");
    }
    ds.label_target.push_back(parse_int<std::int32_t>(fields[1], "target"));
    ds.label_action.push_back(
        static_cast<std::int32_t>(action_from_name(fields[2])));
    ds.label_state.push_back(parse_int<std::int32_t>(fields[3], "next state"));
    for (int c = 0; c < kCellCount; ++c) {
      ds.label_belief.push_back(parse_float<float>(fields[4 + c], "belief"));
    }
  }
  if (std::getline(f, line) && !line.empty()) {
    throw IntegrityError(path.string() + ": more labels than samples");
  }
}

void save_samples(const fs::path& path, const Dataset& ds) {
  auto f = open_out(path);
  f << kSamplesMagic << '\n';
  f << "maps " << ds.map_ids.size() << '\n';
  for (const std::string& id : ds.map_ids) f << id << '\n';
  std::string line;
  for (int i = 0; i < ds.size(); ++i) {
    const SampleInfo& s = ds.info[i];
    line.clear();
    line += std::to_string(i);
    line += ' ';
    line += std::to_string(s.map_index);
    line += ' ';
    line += std::to_string(s.episode);
    line += ' ';
    line += std::to_string(s.step);
    line += ' ';
    line += s.visible ? '1' : '0';
    line += ' ';
    line += std::to_string(s.objects.target.index());
    for (const Position& d : s.objects.distractors) {
      line += ' ';
      line += std::to_string(d.index());
    }
    line += '\n';
    f << line;
  }
  if (!f.good()) throw InputError("write failed: " + path.string());
}

void load_samples(const fs::path& path, std::size_t count, Dataset& ds) {
  auto f = open_in(path);
  expect_magic(f, kSamplesMagic, path.string());
  std::string line;
  if (!std::getline(f, line) || !line.starts_with("maps ")) {
    throw IntegrityError(path.string() + ": missing map count");
  }
  const auto n_maps = parse_int<std::size_t>(
      std::string_view(line).substr(5), "map count");
  for (std::size_t i = 0; i < n_maps; ++i) {
    if (!std::getline(f, line) || line.empty()) {
      throw IntegrityError(path.string() + ": missing map id");
    }
    ds.map_ids.push_back(line);
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(f, line)) {
      throw IntegrityError(path.string() + ": fewer records than samples");
    }
    const auto fields = split_fields(line);
    if (fields.size() != 9) {
      throw IntegrityError(path.string() + ": malformed sample line " +
                           std::to_string(i));
    }
    if (parse_int<std::size_t>(fields[0], "sample id") != i) {
      throw IntegrityError(path.string() + ": sample ids out of order");
    }
    SampleInfo s;
    s.map_index = parse_int<int>(fields[1], "map index");
    s.episode = parse_int<int>(fields[2], "episode");
    s.step = parse_int<int>(fields[3], "step");
    if (fields[4] != "0" && fields[4] != "1") {
      throw IntegrityError(path.string() + ": visibility flag must be 0 or 1");
    }
    s.visible = fields[4] == "1";
    s.objects.target =
        Position::from_index(parse_int<int>(fields[5], "target cell"));
    for (int d = 0; d < kDistractorCount; ++d) {
      s.objects.distractors[d] =
          Position::from_index(parse_int<int>(fields[6 + d], "distractor"));
    }
    if (s.map_index < 0 || s.map_index >= static_cast<int>(ds.map_ids.size())) {
      throw IntegrityError(path.string() + ": map index out of range");
    }
    ds.info.push_back(s);
  }
}

}  // namespace

void save_dataset(const std::string& dir, const Dataset& ds) {
  const fs::path base(dir);
  fs::create_directories(base);
  save_blob(base / "inputs.bin", ds);
  save_labels(base / "labels.txt", ds);
  save_samples(base / "samples.txt", ds);
}

Dataset load_dataset(const std::string& dir) {
  const fs::path base(dir);
  Dataset ds;
  const std::size_t count = load_blob(base / "inputs.bin", ds);
  load_labels(base / "labels.txt", count, ds);
  load_samples(base / "samples.txt", count, ds);
  return ds;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
  auto f = open_out(path);
  f << kManifestMagic << '\n';
  f << "seed " << m.seed << '\n';
  f << "maps " << m.map_ids.size() << '\n';
  for (const std::string& id : m.map_ids) f << id << '\n';
  f << "trajectories_per_map " << m.trajectories_per_map << '\n';
  f << "total_behaviours " << m.total_behaviours << '\n';
  f << "total_samples " << m.total_samples << '\n';
  f << "failed_episodes " << m.failed_episodes << '\n';
  f << "skipped_samples " << m.skipped_samples << '\n';
  f << "steps_to_target " << fmt_float(m.steps_to_target.mean) << ' '
    << fmt_float(m.steps_to_target.variance) << '\n';
  f << "steps_hidden " << fmt_float(m.steps_hidden.mean) << ' '
    << fmt_float(m.steps_hidden.variance) << '\n';
  f << "steps_after_visible " << fmt_float(m.steps_after_visible.mean) << ' '
    << fmt_float(m.steps_after_visible.variance) << '\n';
  if (!f.good()) throw InputError("write failed: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  auto f = open_in(path);
  expect_magic(f, kManifestMagic, path);
  DatasetManifest m;
  std::string line;

  const auto next_fields = [&](std::string_view key) {
    if (!std::getline(f, line)) {
      throw IntegrityError(path + ": missing '" + std::string(key) + "'");
    }
    auto fields = split_fields(line);
    if (fields.empty() || fields[0] != key) {
      throw IntegrityError(path + ": expected '" + std::string(key) +
                           "', got '" + line + "'");
    }
    return fields;
  };
  const auto stat_line = [&](std::string_view key) {
    const auto fields = next_fields(key);
    if (fields.size() != 3) {
      throw IntegrityError(path + ": malformed '" + std::string(key) + "'");
    }
    return SummaryStat{parse_float<double>(fields[1], "mean"),
                       parse_float<double>(fields[2], "variance")};
  };

  m.seed = parse_int<std::uint64_t>(next_fields("seed").at(1), "seed");
  const auto n_maps =
      parse_int<std::size_t>(next_fields("maps").at(1), "map count");
  for (std::size_t i = 0; i < n_maps; ++i) {
    if (!std::getline(f, line) || line.empty()) {
      throw IntegrityError(path + ": missing map id");
    }
    m.map_ids.push_back(line);
  }
  m.trajectories_per_map = parse_int<int>(
      next_fields("trajectories_per_map").at(1), "trajectories_per_map");
  m.total_behaviours = parse_int<std::int64_t>(
      next_fields("total_behaviours").at(1), "total_behaviours");
  m.total_samples = parse_int<std::int64_t>(next_fields("total_samples").at(1),
                                            "total_samples");
  m.failed_episodes =
      parse_int<int>(next_fields("failed_episodes").at(1), "failed_episodes");
  m.skipped_samples =
      parse_int<int>(next_fields("skipped_samples").at(1), "skipped_samples");
  m.steps_to_target = stat_line("steps_to_target");
  m.steps_hidden = stat_line("steps_hidden");
  m.steps_after_visible = stat_line("steps_after_visible");
  return m;
}

}  // namespace tomsyn
