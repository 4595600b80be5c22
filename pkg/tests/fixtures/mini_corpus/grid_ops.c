/* dense matrix helpers */

void mat_product(double **matA, double **matB, double **matC, int dim) {
    int row = 0;
    int mid = 0;
    int col = 0;
    for (row = 1; row <= dim; row++) {
        for (col = 1; col <= dim; col++) {
            matC[row][col] = 0;
        }
        for (mid = 1; mid <= dim; mid++) {
            for (col = 1; col <= dim; col++) {
                matC[row][col] = matC[row][col] + matA[row][mid] * matB[mid][col];
            }
        }
    }
}
