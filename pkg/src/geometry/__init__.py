# src/geometry package
