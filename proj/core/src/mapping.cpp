#include "npe/config.hpp"
#include "npe/error.hpp"
#include "npe/skeleton.hpp"

namespace npe {

RetargetMapping parse_mapping(std::string_view text) {
  const KeyValueFile file = KeyValueFile::parse(text);
  RetargetMapping mapping;
  for (const KeyValue& kv : file.entries()) {
    if (kv.key == "unit_scale") {
      mapping.unit_scale = file.get_double("unit_scale", 1.0);
      if (!(mapping.unit_scale > 0.0)) {
        throw ParseError(ErrorCode::InvalidArgument, "unit_scale must be positive", kv.line, 1);
      }
    } else if (kv.key == "up_axis") {
      if (kv.value == "Y" || kv.value == "y") {
        mapping.up_axis = UpAxis::Y;
      } else if (kv.value == "Z" || kv.value == "z") {
        mapping.up_axis = UpAxis::Z;
      } else {
        throw ParseError(ErrorCode::InvalidArgument, "up_axis must be Y or Z", kv.line, 1);
      }
    } else {
      if (!canonical_topology().index_of(kv.key)) {
        throw ParseError(ErrorCode::InvalidArgument, "'" + kv.key + "' is not a canonical joint", kv.line, 1);
      }
      mapping.joints[kv.key] = kv.value;
    }
  }
  return mapping;
}

}  // namespace npe
