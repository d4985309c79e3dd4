#include <stdio.h>
#include <string.h>

#include "isp.h"

static int fail(const char *what) {
    const char *err = isp_last_error();
    fprintf(stderr, "%s: %s\n", what, err ? err : "(no message)");
    return 1;
}

int main(int argc, char **argv) {
    if (argc != 2) {
        return 2;
    }
    IspCatalog *cat = NULL;
    if (isp_catalog_load("/nonexistent.csv", NULL, NULL, &cat) != ISP_STATUS_IO || isp_last_error() == NULL) {
        return fail("missing catalog");
    }
    if (isp_catalog_load(argv[1], NULL, NULL, &cat) != ISP_STATUS_OK) {
        return fail("load");
    }
    IspEmbedding *emb = NULL;
    if (isp_embedding_tfidf(cat, 64, &emb) != ISP_STATUS_OK) {
        return fail("embed");
    }
    IspSolveOptions opts = isp_solve_options_default();
    opts.t = 3;
    IspResult *res = NULL;
    if (isp_solve(cat, emb, &opts, &res) != ISP_STATUS_OK) {
        return fail("solve");
    }
    printf("items=%zu k=%zu len=%zu", isp_catalog_item_count(cat), isp_result_k(res), isp_result_len(res));
    for (size_t i = 0; i < isp_result_len(res); i++) {
        char *id = NULL;
        if (isp_result_item(res, i, &id) != ISP_STATUS_OK) {
            return fail("item");
        }
        printf(" %s", id);
        isp_string_free(id);
    }
    printf("\n");
    char *id = NULL;
    if (isp_result_item(res, 99, &id) != ISP_STATUS_OUT_OF_RANGE) {
        return fail("out of range");
    }
    isp_result_free(res);
    isp_embedding_free(emb);
    isp_catalog_free(cat);
    return 0;
}
