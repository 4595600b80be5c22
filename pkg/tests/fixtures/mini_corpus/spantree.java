class SpanTree {
    int[] boss;

    int leader(int x) {
        while (boss[x] != x) {
            x = boss[x];
        }
        return x;
    }

    int buildSpanning(int[] edgeU, int[] edgeV, int[] edgeW, int ne, int nv) {
        int totalW = 0;
        sortByWeight(edgeU, edgeV, edgeW, ne);
        for (int v = 0; v < nv; v++) {
            boss[v] = v;
        }
        for (int e = 0; e < ne; e++) {
            int ru = leader(edgeU[e]);
            int rv = leader(edgeV[e]);
            if (ru != rv) {
                boss[ru] = rv;
                totalW = totalW + edgeW[e];
            }
        }
        return totalW;
    }

    void sortByWeight(int[] edgeU, int[] edgeV, int[] edgeW, int ne) {
        for (int a = 0; a < ne; a++) {
            for (int b = a + 1; b < ne; b++) {
                if (edgeW[b] < edgeW[a]) {
                    int t = edgeW[a]; edgeW[a] = edgeW[b]; edgeW[b] = t;
                    t = edgeU[a]; edgeU[a] = edgeU[b]; edgeU[b] = t;
                    t = edgeV[a]; edgeV[a] = edgeV[b]; edgeV[b] = t;
                }
            }
        }
    }
}
