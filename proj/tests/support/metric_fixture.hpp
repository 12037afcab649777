#pragma once

// Hand-derived metric fixture. Expected values were evaluated once with
// 40-digit decimal arithmetic and pasted as literals; nothing here calls the
// library.

#include <array>

namespace physmass::testing {

struct MetricRow {
  double m, m_hat;
  double alde, ape, mnre;
  bool q;
  double ade;
};

inline constexpr std::array<MetricRow, 26> kMetricFixture{{
    {2.0, 2.0, 0.0, 0.0, 1.0, true, 0.0},
    {1.0, 7.38905609893065, 1.999999999999999969247706, 6.38905609893065, 0.1353352832366126960558699, false, 6.38905609893065},
    {0.063, 0.064, 0.01574835696813916860754951, 0.01587301587301587301587302, 0.984375, true, 0.001},
    {1.0, 1.5, 0.4054651081081643819780131, 0.5, 0.6666666666666666666666667, true, 0.5},
    {10.0, 10.0, 0.0, 0.0, 1.0, true, 0.0},
    {0.075, 0.105, 0.3364722366212129305045934, 0.4, 0.7142857142857142857142857, true, 0.030},
    {5.0, 5.0, 0.0, 0.0, 1.0, true, 0.0},
    {2.0, 1.0, 0.6931471805599453094172321, 0.5, 0.5, false, 1.0},
    {1.0, 2.0, 0.6931471805599453094172321, 1.0, 0.5, false, 1.0},
    {0.02, 0.036, 0.5877866649021190081897311, 0.8, 0.5555555555555555555555556, true, 0.016},
    {1.0, 1.99, 0.6881346387364010273741384, 0.99, 0.5025125628140703517587940, true, 0.99},
    {1.0, 2.0, 0.6931471805599453094172321, 1.0, 0.5, false, 1.0},
    {1.0, 0.5, 0.6931471805599453094172321, 0.5, 0.5, false, 0.5},
    {3.0, 3.0, 0.0, 0.0, 1.0, true, 0.0},
    {12.5, 10.161, 0.2071717818045110917993872, 0.18712, 0.81288, true, 2.339},
    {0.014, 0.017, 0.1941560144409574657269498, 0.2142857142857142857142857, 0.8235294117647058823529412, true, 0.003},
    {4.0, 8.0, 0.6931471805599453094172321, 1.0, 0.5, false, 4.0},
    {8.0, 4.0, 0.6931471805599453094172321, 0.5, 0.5, false, 4.0},
    {0.3, 0.6, 0.6931471805599453094172321, 1.0, 0.5, false, 0.3},
    {3.0, 5.999, 0.6929805000028463510581751, 0.9996666666666666666666667, 0.5000833472245374229038173, true, 2.999},
    {0.25, 0.4, 0.4700036292457355536509370, 0.6, 0.625, true, 0.15},
    {100.0, 150.0, 0.4054651081081643819780131, 0.5, 0.6666666666666666666666667, true, 50.0},
    {7.5, 3.0, 0.9162907318741550651835272, 0.6, 0.4, false, 4.5},
    {0.001, 0.0015, 0.4054651081081643819780131, 0.5, 0.6666666666666666666666667, true, 0.0005},
    {50.0, 49.0, 0.02020270731751944840804530, 0.02, 0.98, true, 1.0},
    {1.2, 0.61, 0.6766178786087347454963118, 0.4916666666666666666666667, 0.5083333333333333333333333, true, 0.59},
}};

// Means over the whole fixture.
inline constexpr double kFixtureMean_alde = 0.4951534895679400821962198;
inline constexpr double kFixtureMean_ape = 0.7195256985547197496947497;
inline constexpr double kFixtureMean_mnre = 0.6554573157005588279874845;
inline constexpr double kFixtureMean_q_rate = 0.6538461538461538461538462;
inline constexpr double kFixtureMean_ade = 3.127213696112717307692308;

}  // namespace physmass::testing
