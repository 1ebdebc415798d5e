#include <math.h>
#include <stdio.h>
#include "flag_gluer.h"

static const char *HOPF =
    "{\"num_tetrahedra\":1,\"edge_orders\":{\"0\":3,\"1\":3,\"2\":3},\"gluings\":[["
    "{\"tet\":0,\"perm\":[1,0,2,3]},{\"tet\":0,\"perm\":[1,0,2,3]},"
    "{\"tet\":0,\"perm\":[0,1,3,2]},{\"tet\":0,\"perm\":[0,1,3,2]}]]}";

int main(void) {
    FgTriangulation *tri = NULL;
    FgParams *init = NULL, *solved = NULL;
    FgSolveInfo info;
    double res[32];
    size_t n = 0;

    if (fg_triangulation_from_json("{", &tri) != FG_STATUS_PARSE) return 10;
    if (fg_last_error()[0] == '\0') return 11;
    if (fg_triangulation_from_json(HOPF, &tri) != FG_STATUS_OK) return 12;
    if (fg_params_all_ones(tri, &init) != FG_STATUS_OK) return 13;
    if (fg_solve(tri, init, NULL, 0, 0.0, 0, &solved, &info) != FG_STATUS_OK) return 14;
    if (info.status != FG_SOLVE_STATUS_CONVERGED) return 15;
    if (fg_residuals(tri, solved, res, 32, &n) != FG_STATUS_OK || n != fg_num_residuals(tri)) return 16;
    for (size_t i = 0; i < n; i++)
        if (fabs(res[i]) > 1e-11) return 17;
    printf("converged in %zu iterations, residual %.1e\n", info.iterations, info.residual_norm);
    fg_params_free(solved);
    fg_params_free(init);
    fg_triangulation_free(tri);
    return 0;
}
