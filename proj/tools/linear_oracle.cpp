// Writes the reference solution of the linear stationary preset
//   u' - (a0/2) u = u + f on [0, 1], a = 1, p = 2, alpha = 1, constant a0 and f,
// as the stationarity system of I assembled densely from the SBP stencil.
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <Eigen/Dense>

int main(int argc, char** argv) {
  CLI::App app{"Dense reference solve for the linear stationary preset"};
  int n = 129;
  double a0 = 1.0, f = -1.0;
  std::string out = "linear_oracle.csv";
  app.add_option("--nodes", n, "grid nodes")->capture_default_str();
  app.add_option("--a0", a0, "constant zero-order coefficient")->capture_default_str();
  app.add_option("--f", f, "constant source")->capture_default_str();
  app.add_option("--out", out, "output CSV")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  if (n < 3) {
    std::cerr << "need at least 3 nodes\n";
    return 2;
  }

  const double h = 1.0 / (n - 1);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  D(0, 0) = -1.0 / h;
  D(0, 1) = 1.0 / h;
  D(n - 1, n - 2) = -1.0 / h;
  D(n - 1, n - 1) = 1.0 / h;
  for (int i = 1; i < n - 1; ++i) {
    D(i, i - 1) = -0.5 / h;
    D(i, i + 1) = 0.5 / h;
  }
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, h);
  w[0] = w[n - 1] = h / 2;

  // phi(u) = sum w (c u^2/2 + f u) with c = 1 + a0/2; the trace terms add u^2/2 at both ends.
  const double c = 1.0 + 0.5 * a0;
  if (!(c > 0.0)) {
    std::cerr << "1 + a0/2 must be positive\n";
    return 3;
  }
  Eigen::MatrixXd K = c * Eigen::MatrixXd(w.asDiagonal()) + D.transpose() * w.asDiagonal() * D / c;
  K(0, 0) += 1.0;
  K(n - 1, n - 1) += 1.0;
  const Eigen::VectorXd rhs = -f * w + D.transpose() * (w * f) / c;
  const Eigen::VectorXd u = K.ldlt().solve(rhs);

  FILE* fp = std::fopen(out.c_str(), "wb");
  if (!fp) {
    std::cerr << "cannot write " << out << "\n";
    return 4;
  }
  std::fprintf(fp, "x,value\n");
  for (int i = 0; i < n; ++i) std::fprintf(fp, "%.17g,%.17g\n", i * h, u[i]);
  std::fclose(fp);
  return 0;
}
