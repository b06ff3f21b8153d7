#include "tomsyn/trajectory_io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "tomsyn/error.hpp"
#include "tomsyn/text.hpp"

namespace tomsyn {

void write_trajectories(std::ostream& out,
                        const std::vector<Trajectory>& trajectories) {
  std::string line;
  for (const Trajectory& traj : trajectories) {
    if (traj.map_id.empty() ||
        traj.map_id.find(' ') != std::string::npos) {
      throw IntegrityError("trajectory map id unfit for the record format: '" +
                           traj.map_id + "'");
    }
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
      const TrajectoryStep& s = traj.steps[k];
      line.clear();
      line += traj.map_id;
      line += ' ';
      line += std::to_string(traj.episode);
      line += ' ';
      line += std::to_string(k);
      line += ' ';
      line += std::to_string(s.pos.row);
      line += ' ';
      line += std::to_string(s.pos.col);
      line += ' ';
      line += action_name(s.action);
      line += ' ';
      line += std::to_string(traj.target.row);
      line += ' ';
      line += std::to_string(traj.target.col);
      line += ' ';
      line += s.target_visible ? '1' : '0';
      for (int i = 0; i < kCellCount; ++i) {
        line += ' ';
        line += fmt_float(s.belief_before.prob(i));
      }
      line += '\n';
      out << line;
    }
  }
}

std::vector<Trajectory> read_trajectories(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 9 + kCellCount) {
      throw IntegrityError("trajectory record line " + std::to_string(line_no) +
                           ": expected " + std::to_string(9 + kCellCount) +
                           " fields, got " + std::to_string(f.size()));
    }
    const std::string map_id(f[0]);
    const int episode = parse_int<int>(f[1], "episode");
    const int step = parse_int<int>(f[2], "step");
    TrajectoryStep s;
    s.pos = {parse_int<int>(f[3], "pos row"), parse_int<int>(f[4], "pos col")};
    s.action = action_from_name(f[5]);
    const Position target{parse_int<int>(f[6], "target row"),
                          parse_int<int>(f[7], "target col")};
    if (f[8] != "0" && f[8] != "1") {
      throw IntegrityError("trajectory record line " + std::to_string(line_no) +
                           ": visibility flag must be 0 or 1");
    }
    s.target_visible = f[8] == "1";
    if (!s.pos.in_bounds() || !target.in_bounds()) {
      throw IntegrityError("trajectory record line " + std::to_string(line_no) +
                           ": position out of bounds");
    }
    for (int i = 0; i < kCellCount; ++i) {
      s.belief_before.mutable_prob(i) = parse_float<double>(f[9 + i], "belief");
    }

    const bool starts_new = out.empty() || out.back().map_id != map_id ||
                            out.back().episode != episode;
    if (starts_new) {
      if (step != 0) {
        throw IntegrityError("trajectory record line " +
                             std::to_string(line_no) +
                             ": new trajectory must start at step 0");
      }
      Trajectory traj;
      traj.map_id = map_id;
      traj.episode = episode;
      traj.target = target;
      out.push_back(std::move(traj));
    } else if (step != static_cast<int>(out.back().steps.size()) ||
               out.back().target != target) {
      throw IntegrityError("trajectory record line " + std::to_string(line_no) +
                           ": step index or target inconsistent");
    }
    out.back().steps.push_back(std::move(s));
  }
  return out;
}

void save_trajectories(const std::string& path,
                       const std::vector<Trajectory>& trajectories) {
  std::ofstream f(path, std::ios::binary);  // binary: no newline translation
  if (!f) throw InputError("cannot open for writing: " + path);
  write_trajectories(f, trajectories);
  if (!f.good()) throw InputError("write failed: " + path);
}

std::vector<Trajectory> load_trajectories(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open: " + path);
  return read_trajectories(f);
}

}  // namespace tomsyn
