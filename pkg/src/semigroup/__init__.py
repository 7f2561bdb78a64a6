# src/semigroup package
