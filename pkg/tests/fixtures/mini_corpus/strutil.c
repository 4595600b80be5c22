void reverse_in_place(char *s, int slen) {
    int front = 0;
    int back = slen - 1;
    while (front < back) {
        char swp = s[front];
        s[front] = s[back];
        s[back] = swp;
        front++;
        back--;
    }
}

int count_words(const char *s) {
    int total = 0;
    int in_word = 0;
    while (*s) {
        if (*s == ' ') {
            in_word = 0;
        } else if (!in_word) {
            in_word = 1;
            total++;
        }
        s++;
    }
    return total;
}
