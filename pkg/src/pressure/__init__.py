# src/pressure package
