#pragma once

#include <array>

// Published true-utility and AT/AE values for the 20 scenarios, in
// scenario_library() order (E1.T1 ... E4.T5), rounded to 2 decimals.
namespace obdlab::reference {

using Row = std::array<double, 6>;

inline constexpr std::array<Row, 20> kUtility{{
    {0.15, 0.21, 0.27, -0.22, -0.26, -0.30},   // E1.T1
    {0.15, 0.24, 0.33, 0.41, 0.49, -0.02},     // E1.T2
    {-0.52, -0.49, -0.46, -0.43, -0.40, -0.36},// E1.T3
    {0.07, -0.42, -0.39, -0.36, -0.33, -0.30}, // E1.T4
    {0.15, 0.25, 0.34, 0.43, 0.52, 0.61},      // E1.T5
    {0.25, 0.31, 0.37, -0.22, -0.36, -0.50},   // E2.T1
    {0.25, 0.34, 0.43, 0.41, 0.39, -0.22},     // E2.T2
    {-0.42, -0.39, -0.36, -0.43, -0.50, -0.56},// E2.T3
    {0.17, -0.32, -0.29, -0.36, -0.43, -0.50}, // E2.T4
    {0.25, 0.35, 0.44, 0.43, 0.42, 0.41},      // E2.T5
    {0.05, 0.03, 0.01, -0.56, -0.68, -0.80},   // E3.T1
    {0.05, 0.06, 0.07, 0.07, 0.07, -0.52},     // E3.T2
    {-0.62, -0.67, -0.72, -0.77, -0.82, -0.86},// E3.T3
    {-0.03, -0.60, -0.65, -0.70, -0.75, -0.80},// E3.T4
    {0.05, 0.07, 0.08, 0.09, 0.10, 0.11},      // E3.T5
    {0.05, 0.06, 0.07, -0.42, -0.36, -0.30},   // E4.T1
    {0.05, 0.09, 0.13, 0.21, 0.39, -0.02},     // E4.T2
    {-0.62, -0.64, -0.66, -0.63, -0.50, -0.36},// E4.T3
    {-0.03, -0.57, -0.59, -0.56, -0.43, -0.30},// E4.T4
    {0.05, 0.10, 0.14, 0.23, 0.42, 0.61},      // E4.T5
}};

inline constexpr std::array<Row, 20> kAtae{{
    {0.99, 0.93, 0.86, 0.79, 0.71, 0.61},  // E1.T1
    {0.99, 1.02, 1.05, 1.06, 1.07, 0.92},  // E1.T2
    {0.65, 0.63, 0.61, 0.59, 0.57, 0.54},  // E1.T3
    {0.76, 0.69, 0.67, 0.66, 0.64, 0.61},  // E1.T4
    {0.99, 1.03, 1.07, 1.12, 1.17, 1.23},  // E1.T5
    {1.05, 0.99, 0.92, 0.79, 0.66, 0.53},  // E2.T1
    {1.05, 1.08, 1.12, 1.06, 0.99, 0.79},  // E2.T2
    {0.69, 0.67, 0.66, 0.59, 0.53, 0.46},  // E2.T3
    {0.81, 0.74, 0.72, 0.66, 0.59, 0.53},  // E2.T4
    {1.05, 1.10, 1.14, 1.12, 1.09, 1.06},  // E2.T5
    {0.94, 0.84, 0.74, 0.64, 0.54, 0.44},  // E3.T1
    {0.94, 0.92, 0.89, 0.86, 0.81, 0.65},  // E3.T2
    {0.62, 0.57, 0.53, 0.48, 0.43, 0.38},  // E3.T3
    {0.72, 0.63, 0.58, 0.53, 0.48, 0.44},  // E3.T4
    {0.94, 0.93, 0.92, 0.90, 0.89, 0.88},  // E3.T5
    {0.94, 0.85, 0.76, 0.69, 0.66, 0.61},  // E4.T1
    {0.94, 0.93, 0.92, 0.93, 0.99, 0.92},  // E4.T2
    {0.62, 0.58, 0.54, 0.52, 0.53, 0.54},  // E4.T3
    {0.72, 0.64, 0.60, 0.58, 0.59, 0.61},  // E4.T4
    {0.94, 0.94, 0.95, 0.98, 1.09, 1.23},  // E4.T5
}};

// Italic or bold cells: doses the published table marks acceptable.
inline constexpr std::array<std::array<bool, 6>, 20> kMarkedAcceptable{{
    {1, 1, 1, 0, 0, 0},  // E1.T1
    {1, 1, 1, 1, 1, 0},  // E1.T2
    {0, 0, 0, 0, 0, 0},  // E1.T3
    {1, 0, 0, 0, 0, 0},  // E1.T4
    {1, 1, 1, 1, 1, 1},  // E1.T5
    {1, 1, 1, 0, 0, 0},  // E2.T1
    {1, 1, 1, 0, 0, 0},  // E2.T2
    {0, 0, 0, 0, 0, 0},  // E2.T3
    {1, 0, 0, 0, 0, 0},  // E2.T4
    {1, 1, 1, 1, 1, 1},  // E2.T5
    {0, 0, 0, 0, 0, 0},  // E3.T1
    {0, 0, 0, 0, 0, 0},  // E3.T2
    {0, 0, 0, 0, 0, 0},  // E3.T3
    {0, 0, 0, 0, 0, 0},  // E3.T4
    {0, 0, 0, 0, 0, 1},  // E3.T5
    {0, 0, 1, 0, 0, 0},  // E4.T1
    {0, 0, 1, 1, 1, 0},  // E4.T2
    {0, 0, 0, 0, 0, 0},  // E4.T3
    {0, 0, 0, 0, 0, 0},  // E4.T4
    {0, 0, 1, 1, 1, 1},  // E4.T5
}};

}  // namespace obdlab::reference
