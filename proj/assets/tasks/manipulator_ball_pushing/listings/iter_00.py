def reward_function():
    distance_reward = 1.0 / (1.0 + np.linalg.norm(ball_pos - hole_pos))
    direction_to_hole = (hole_pos - ball_pos) / (np.linalg.norm(hole_pos - ball_pos) + 1e-6)
    velocity_reward = np.dot(ball_vel, direction_to_hole)
    velocity_reward = max(0, velocity_reward)
    gripper_ball_distance_reward = 1.0 / (1.0 + np.linalg.norm(gripper_pos - ball_pos))
    total_reward = 0.4 * distance_reward + 0.4 * velocity_reward + 0.2 * gripper_ball_distance_reward

    return total_reward
