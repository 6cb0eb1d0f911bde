# Step definitions package