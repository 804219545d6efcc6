# Tests for repositories
