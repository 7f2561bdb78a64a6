# src/flux package
