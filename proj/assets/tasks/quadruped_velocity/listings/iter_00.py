def reward_function():
    # Constants
    target_speed = 3.0
    min_height = 0.5
    smoothness_weight = 0.1
    stability_weight = 0.1
    speed_weight = 1.0

    # Reward for moving forward at the target speed
    speed_reward = speed_weight * min(target_speed, robot_linvel[0])

    # Reward for not falling over
    height_reward = 0 if robot_pos[2] < min_height else 1

    # Reward for walking smoothly (not jumping or rotating in the air)
    smoothness_reward = smoothness_weight * (1 - abs(robot_linvel[2]) - abs(robot_angvel[0]) - abs(robot_angvel[1]) - abs(robot_angvel[2]))

    # Reward for walking stably (not rotating)
    stability_reward = stability_weight * (1 - abs(robot_rot[0]) - abs(robot_rot[1]) - abs(robot_rot[2]) - abs(robot_rot[3]))

    # Total reward
    total_reward = speed_reward + height_reward + smoothness_reward + stability_reward

    return total_reward
