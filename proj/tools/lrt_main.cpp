// Placeholder main while the core library is under construction.
int main() { return 0; }
