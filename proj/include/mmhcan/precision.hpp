#pragma once

// The library can be compiled in 32-bit (default) or 64-bit mode. Each mode
// lives in its own inline namespace so both builds can be linked into one
// binary without symbol clashes.

#ifdef MMHCAN_DOUBLE
#define MMHCAN_PRECISION_NS f64
#else
#define MMHCAN_PRECISION_NS f32
#endif

#define MMHCAN_NAMESPACE_BEGIN \
  namespace mmhcan {           \
  inline namespace MMHCAN_PRECISION_NS {
#define MMHCAN_NAMESPACE_END \
  }                          \
  }

MMHCAN_NAMESPACE_BEGIN

#ifdef MMHCAN_DOUBLE
using Scalar = double;
inline constexpr const char* kPrecisionName = "f64";
#else
using Scalar = float;
inline constexpr const char* kPrecisionName = "f32";
#endif

MMHCAN_NAMESPACE_END
