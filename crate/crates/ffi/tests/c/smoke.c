#include <math.h>
#include <stdio.h>

#include "annulus_extremal.h"

int main(void) {
    AxMetric *m = NULL;
    AxSolution *sol = NULL;
    double r_max = 0.0;
    if (ax_metric_constant(&m) != AX_STATUS_OK) return 1;
    if (ax_nitsche_bound(m, 1.0, 1.0, 1.25, &r_max) != AX_STATUS_OK) return 2;
    if (fabs(r_max - 2.0) > 1e-10) return 3;
    if (ax_solve(m, 1.0, 1.0, 3.0, 1.25, 64, &sol) != AX_STATUS_INFEASIBLE) return 4;
    if (ax_solve(m, 1.0, 1.0, 1.5, 1.25, 64, &sol) != AX_STATUS_OK) return 5;
    printf("alpha=%.17g energy=%.17g\n", ax_solution_alpha(sol), ax_solution_energy(sol));
    ax_solution_free(sol);
    ax_metric_free(m);
    return 0;
}
