/* Prints the spectral radius of synchronous EASGD (p = 1) over a small grid.
 *
 *   cargo build -p elastic-opt-ffi
 *   cc -Icrates/ffi/include crates/ffi/examples/stability.c \
 *      target/debug/libelastic_opt_ffi.a -lpthread -ldl -lm -o stability
 */
#include <stdio.h>

#include "elastic_opt.h"

int main(void) {
    const double eta_h[] = {0.5, 1.0, 1.5};
    const double alpha[] = {0.1, 0.5, 0.9};
    EoStabilityGrid *grid = NULL;
    EoStatus st = eo_scan_stability("easgd_sync", 1, eta_h, 3, alpha, 3, &grid);
    if (st != EO_STATUS_OK) {
        fprintf(stderr, "scan failed (%d): %s\n", st, eo_last_error_message());
        return 1;
    }
    double radii[9];
    eo_stability_grid_radii(grid, radii, 9);
    for (int i = 0; i < 3; i++) {
        for (int j = 0; j < 3; j++) {
            printf("eta_h=%.2f alpha=%.2f radius=%.6f\n", eta_h[i], alpha[j], radii[i * 3 + j]);
        }
    }
    printf("unstable cells: %zu\n", eo_stability_grid_unstable_count(grid));
    eo_stability_grid_free(grid);
    return 0;
}
