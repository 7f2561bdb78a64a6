# src/api package 