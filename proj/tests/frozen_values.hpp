#pragma once

// Extended-precision reference values produced by tests/oracles/freeze.py.

namespace frozen {

inline constexpr double kFitMu[] = {-0.3104712116713453645, 0.84481270956706657564, 1.8522631432990394743,
                                    3.0075470645374514145};
inline constexpr double kFitQ[] = {
    0.9,                    0.60804279415613865815, 0.22202607521149409253,  0.069931130632367249319,
    0.60804279415613865815, 0.7,                    0.069931130632367249319, 0.022026075211494092532,
    0.22202607521149409253, 0.069931130632367249319, 0.3,                    0.0080427941561386581489,
    0.069931130632367249319, 0.022026075211494092532, 0.0080427941561386581489, 0.1};

// v6 = (0.61, 0.47, 0.38, -0.29, 0.33, 0.12), k = 3
inline constexpr double kV6[] = {0.61, 0.47, 0.38, -0.29, 0.33, 0.12};
inline constexpr double kV6T3 = 0.35710615004863458178;

// v8 = (0.52, -0.41, 0.40, 0.33, 0.31, 0.22, 0.17, 0.05), k = 1..7
inline constexpr double kV8[] = {0.52, -0.41, 0.40, 0.33, 0.31, 0.22, 0.17, 0.05};
inline constexpr double kV8Tk[] = {0.7919217441938358436,  0.62673042913509006757, 0.47771407981536683662,
                                   0.33752749271325207982, 0.20564374838205440662, 0.09391191928728619473,
                                   0.018279708787897891515};

// (sqrt(0.98), 0.1, 0.1), k = 2
inline constexpr double kExampleT2 = 0.019258240356725201563;

} // namespace frozen
