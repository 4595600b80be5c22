int run_length_encode(const char *in, char *out, int amt) {
    int wr = 0;
    int rd = 0;
    while (rd < amt) {
        int rn = rd;
        while (rn < amt && in[rn] == in[rd]) {
            rn++;
        }
        out[wr++] = in[rd];
        out[wr++] = (char)('0' + (rn - rd));
        rd = rn;
    }
    return wr;
}
