# Unit tests - fast, isolated, small synthetic inputs
