int locate(const int *arr, int cnt, int target) {
    int low = 0;
    int high = cnt - 1;
    while (low <= high) {
        int middle = low + (high - low) / 2;
        if (arr[middle] == target) {
            return middle;
        } else if (arr[middle] < target) {
            low = middle + 1;
        } else {
            high = middle - 1;
        }
    }
    return -1;
}
