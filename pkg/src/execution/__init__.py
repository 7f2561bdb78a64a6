# src/execution package 