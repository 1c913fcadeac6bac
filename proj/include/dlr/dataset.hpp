#ifndef DLR_DATASET_HPP
#define DLR_DATASET_HPP

#include <string>

#include "dlr/channel_sim.hpp"

namespace dlr {

// On-disk container, little-endian:
//   magic "DLRS" | version u32 = 1 | record count u32
//   pattern: 48 x u16 freq indices, 2 x u16 time indices
//   per record: snr_db f32
//               truth  96*14*2 f32, index = ((f*14)+t)*2 + plane (0 = re)
//               dmrs   48*2*2  f32, same ordering rule
//               record seed u64
// Only the standard 96x14 / 48x2 geometry is serializable.
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

} // namespace dlr

#endif
