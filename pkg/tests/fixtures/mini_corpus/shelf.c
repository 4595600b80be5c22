/* keep a shelf of values ordered */

void arrange(int *arr, int len) {
    int pos;
    int idx;
    int keyval;
    for (pos = len - 1; pos >= 1; pos--) {
        keyval = arr[pos];
        idx = pos;
        while (idx > 0 && arr[idx - 1] > keyval) {
            arr[idx] = arr[idx - 1];
            idx = idx - 1;
        }
        arr[idx] = keyval;
    }
}
