# src/logging package 