#ifndef CROSSAUG_CHECKPOINT_H_
#define CROSSAUG_CHECKPOINT_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "crossaug/array.h"
#include "crossaug/autodiff.h"

// Parameter checkpoint container. Byte layout, all integers little-endian:
//
//   offset 0   8 bytes  magic "XAUGCKPT"
//          8   u32      format version (1)
//         12   u32      number of arrays N
//   then N records:
//              u32      name length L
//              L bytes  name (UTF-8, no terminator)
//              u32      number of dimensions D
//              D x u64  dimension sizes
//              P x f64  values, row-major, IEEE-754 little-endian,
//                       P = product of the dimensions
//
// Records appear in the order they were written.
namespace crossaug {

struct NamedArray {
  std::string name;
  Array value;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_arrays(std::ostream& out, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_arrays(std::istream& in);

void save_arrays(const std::string& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> load_arrays(const std::string& path);

// Convenience for parameter sets: values are written under Parameter::name,
// and loading requires the same names and shapes in any order.
void save_parameters(const std::string& path, const std::vector<const ad::Parameter*>& params);
void load_parameters(const std::string& path, const std::vector<ad::Parameter*>& params);

}  // namespace crossaug

#endif  // CROSSAUG_CHECKPOINT_H_
