# Subword language-modeling toolkit
