#pragma once

#include <iosfwd>
#include <vector>

#include "tomsyn/planner.hpp"

namespace tomsyn {

// Line-delimited step records, one self-contained line per step:
//   <map_id> <episode> <step> <pos_r> <pos_c> <action> <target_r> <target_c>
//   <visible> <b0> ... <b120>
// Steps of one trajectory are consecutive and 0-indexed. Bit-exact
// round-trip; map ids therefore must not contain spaces.
void write_trajectories(std::ostream& out,
                        const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectories(std::istream& in);

void save_trajectories(const std::string& path,
                       const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> load_trajectories(const std::string& path);

}  // namespace tomsyn
