def reward_function():
    distance_reward = 1.0 / (1.0 + np.linalg.norm(ball_pos - hole_pos))
    direction_to_hole = (hole_pos - ball_pos) / np.linalg.norm(hole_pos - ball_pos)
    velocity_reward = np.dot(ball_vel, direction_to_hole)
    velocity_reward = max(0, velocity_reward)  # Ensure the reward is positive
    gripper_ball_distance_reward = 1.0 / (1.0 + np.linalg.norm(gripper_pos - ball_pos))
    total_reward = 0.5 * distance_reward + 0.4 * velocity_reward - 0.1 * gripper_ball_distance_penalty


    return total_reward
